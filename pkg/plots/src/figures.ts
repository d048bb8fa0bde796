/** The four figure kinds built from solver CSV outputs. */

import { Table, column, hasColumn } from "./csv.js";
import { Chart, PALETTE, Series } from "./svg.js";

/** Energy evolution vs omega*t, with analytic reference overlays when the
 * run provides them. Internal and potential energies are plotted as
 * deviations from their initial values (their absolute offsets are large and
 * gauge-dependent). */
export function plotEnergies(table: Table): string {
  for (const c of ["t", "e_kin", "e_int", "e_pot"]) {
    column(table, c);
  }
  const tcol = hasColumn(table, "omega_t") ? "omega_t" : "t";
  const xs = column(table, tcol);
  const series: Series[] = [];
  const kin = column(table, "e_kin");
  const dint = hasColumn(table, "e_int_dev")
    ? column(table, "e_int_dev")
    : deviation(column(table, "e_int"));
  const dpot = hasColumn(table, "e_pot_dev")
    ? column(table, "e_pot_dev")
    : deviation(column(table, "e_pot"));
  series.push({ x: xs, y: kin, label: "kinetic", color: PALETTE[0] });
  series.push({ x: xs, y: dint, label: "internal (dev)", color: PALETTE[1] });
  series.push({ x: xs, y: dpot, label: "potential (dev)", color: PALETTE[2] });
  if (hasColumn(table, "e_kin_ref")) {
    series.push({
      x: xs, y: column(table, "e_kin_ref"),
      label: "analytic", color: "#444444", dash: "5,3",
    });
    series.push({
      x: xs, y: column(table, "e_int_dev_ref"),
      label: "", color: "#444444", dash: "5,3",
    });
    series.push({
      x: xs, y: column(table, "e_pot_dev_ref"),
      label: "", color: "#444444", dash: "5,3",
    });
  }
  const chart = new Chart({
    xLabel: tcol === "omega_t" ? "omega t" : "t",
    yLabel: "bulk energy",
    title: "energy evolution",
  });
  return chart.render(series);
}

function deviation(v: number[]): number[] {
  const v0 = v.length > 0 ? v[0] : 0;
  return v.map((x) => x - v0);
}

/** Histogram of gravity sub-cycle counts; bins that occur only once are
 * dropped (isolated outliers such as the initial cold solve). */
export function plotHistogram(table: Table): string {
  const values = column(table, "subcycles");
  const freq = column(table, "frequency");
  const keep = freq.map((f) => f > 1);
  const series: Series[] = [
    {
      x: values.filter((_, i) => keep[i]),
      y: freq.filter((_, i) => keep[i]),
      label: "solves",
      color: PALETTE[0],
    },
  ];
  const chart = new Chart({
    xLabel: "pseudotime steps per gravity solve",
    yLabel: "frequency",
    title: "gravity sub-cycles",
  });
  return chart.render(series, true);
}

/** Overlay one column of several slice files (e.g. adaptive run vs uniform
 * reference). */
export function plotSlice(
  tables: { name: string; table: Table }[],
  variable?: string,
): string {
  if (tables.length === 0) {
    throw new Error("need at least one slice CSV");
  }
  const varname =
    variable ??
    tables[0].table.columns.find((c) => c !== "x") ??
    "rho";
  const series: Series[] = tables.map((t, i) => ({
    x: column(t.table, "x"),
    y: column(t.table, varname),
    label: t.name,
    color: PALETTE[i % PALETTE.length],
    dash: i > 0 ? "5,3" : undefined,
  }));
  const chart = new Chart({
    xLabel: "x",
    yLabel: varname,
    title: `slice of ${varname}`,
  });
  return chart.render(series);
}

/** Error vs mesh spacing on log-log axes with an order reference slope. */
export function plotEoc(table: Table, order: number): string {
  const hs = column(table, "h");
  const vars = table.columns.filter((c) => c !== "h" && c !== "n_elements");
  const series: Series[] = vars.map((name, i) => ({
    x: hs,
    y: column(table, name),
    label: name,
    color: PALETTE[i % PALETTE.length],
  }));
  if (hs.length > 0 && vars.length > 0) {
    const anchor = Math.max(...vars.map((v) => column(table, v)[0]));
    series.push({
      x: hs,
      y: hs.map((h) => anchor * Math.pow(h / hs[0], order)),
      label: `order ${order}`,
      color: "#444444",
      dash: "5,3",
    });
  }
  const chart = new Chart({
    xLabel: "h",
    yLabel: "L2 error",
    title: "convergence",
    xLog: true,
    yLog: true,
  });
  return chart.render(series);
}
