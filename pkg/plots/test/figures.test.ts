import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { column, parseCsv } from "../src/csv.js";
import { buildFigure, main } from "../src/cli.js";
import { plotEnergies, plotHistogram } from "../src/figures.js";

const DATA = join(__dirname, "data");
const read = (name: string) => parseCsv(readFileSync(join(DATA, name), "utf8"));

describe("csv reader", () => {
  it("parses header and numeric rows", () => {
    const t = read("subcycles.csv");
    expect(t.columns).toEqual(["subcycles", "frequency"]);
    expect(column(t, "frequency")[0]).toBe(2400);
  });

  it("rejects missing columns with a descriptive error", () => {
    const t = read("subcycles.csv");
    expect(() => column(t, "e_kin")).toThrow(/missing column 'e_kin'/);
  });

  it("rejects ragged rows", () => {
    expect(() => parseCsv("a,b\n1,2,3\n")).toThrow(/row 1 has 3 fields/);
  });
});

describe("energies figure", () => {
  it("overlays computed and analytic curves", () => {
    const svg = plotEnergies(read("energies.csv"));
    expect(svg).toContain("<svg");
    expect(svg).toContain("kinetic");
    expect(svg).toContain("analytic");
    expect(svg).toContain("stroke-dasharray");
    // three computed + three dashed reference polylines
    expect(svg.match(/<polyline/g)?.length).toBe(6);
  });

  it("renders empty axes for a header-only CSV", () => {
    const svg = plotEnergies(read("energies_empty.csv"));
    expect(svg).toContain("<svg");
    expect(svg.match(/<polyline/g) ?? []).toHaveLength(0);
  });

  it("fails with a descriptive message when a column is missing", () => {
    expect(() => plotEnergies(read("slice_a.csv"))).toThrow(/missing column/);
  });
});

describe("histogram figure", () => {
  it("drops bins that occur only once", () => {
    const svg = plotHistogram(read("subcycles.csv"));
    // bins 9 and 397 have frequency 1 and must be absent
    expect(svg.match(/<rect [^>]*fill="#1f77b4"/g)?.length).toBe(4);
  });

  it("renders a single bar for single-bin input", () => {
    const svg = plotHistogram(read("subcycles_single.csv"));
    expect(svg.match(/<rect [^>]*fill="#1f77b4"/g)?.length).toBe(1);
  });
});

describe("slice figure", () => {
  it("overlays several files and picks the requested column", () => {
    const svg = buildFigure(
      "slice",
      [join(DATA, "slice_a.csv"), join(DATA, "slice_b.csv")],
      { column: "phi" },
    );
    expect(svg.match(/<polyline/g)?.length).toBe(2);
    expect(svg).toContain("slice_a");
    expect(svg).toContain("slice_b");
    expect(svg).toContain("phi");
  });
});

describe("eoc figure", () => {
  it("draws per-variable curves plus the order reference", () => {
    const svg = buildFigure("eoc", [join(DATA, "eoc.csv")], { order: 4 });
    expect(svg.match(/<polyline/g)?.length).toBe(5); // 4 variables + slope
    expect(svg).toContain("order 4");
    expect(svg).toContain("1e-"); // log-scale tick labels
  });
});

describe("cli", () => {
  it("is byte-stable across repeated runs on fixed input", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const a = join(dir, "a.svg");
    const b = join(dir, "b.svg");
    expect(main(["energies", join(DATA, "energies.csv"), "--out", a])).toBe(0);
    expect(main(["energies", join(DATA, "energies.csv"), "--out", b])).toBe(0);
    expect(readFileSync(a)).toEqual(readFileSync(b));
  });

  it("reports usage errors and bad kinds", () => {
    expect(main(["energies"])).toBe(2);
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    expect(
      main(["starchart", join(DATA, "eoc.csv"), "--out", join(dir, "x.svg")]),
    ).toBe(1);
  });
});
