/** Minimal deterministic SVG chart builder.
 *
 * All numbers are formatted with fixed precision so identical inputs always
 * produce byte-identical output files.
 */

export interface Series {
  x: number[];
  y: number[];
  label: string;
  color: string;
  dash?: string;
}

export interface AxesOptions {
  width?: number;
  height?: number;
  xLabel: string;
  yLabel: string;
  title?: string;
  xLog?: boolean;
  yLog?: boolean;
}

const MARGIN = { left: 64, right: 16, top: 28, bottom: 44 };

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  const s = v.toFixed(3);
  return s === "-0.000" ? "0.000" : s;
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const candidates = [1, 2, 2.5, 5, 10].map((c) => c * mag);
  const step = candidates.find((c) => span / c <= n) ?? candidates[4];
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(lo); e <= Math.floor(hi) + 1e-9; e++) {
    ticks.push(e);
  }
  return ticks.length > 0 ? ticks : [lo];
}

function tickLabel(v: number, log: boolean): string {
  if (log) return `1e${v}`;
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-3)) {
    return v.toExponential(1);
  }
  const s = String(Math.round(v * 1e6) / 1e6);
  return s;
}

export class Chart {
  private lines: string[] = [];
  private readonly w: number;
  private readonly h: number;
  private xdom: [number, number] = [0, 1];
  private ydom: [number, number] = [0, 1];
  private readonly opts: AxesOptions;

  constructor(opts: AxesOptions) {
    this.opts = opts;
    this.w = opts.width ?? 640;
    this.h = opts.height ?? 420;
  }

  private tx(v: number): number {
    const [lo, hi] = this.xdom;
    const f = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return MARGIN.left + f * (this.w - MARGIN.left - MARGIN.right);
  }

  private ty(v: number): number {
    const [lo, hi] = this.ydom;
    const f = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return this.h - MARGIN.bottom - f * (this.h - MARGIN.top - MARGIN.bottom);
  }

  private mapped(series: Series[]): Series[] {
    if (!this.opts.xLog && !this.opts.yLog) return series;
    return series.map((s) => {
      const keep = s.x.map(
        (xv, i) =>
          (!this.opts.xLog || xv > 0) && (!this.opts.yLog || s.y[i] > 0),
      );
      return {
        ...s,
        x: s.x.filter((_, i) => keep[i]).map((v) => (this.opts.xLog ? Math.log10(v) : v)),
        y: s.y.filter((_, i) => keep[i]).map((v) => (this.opts.yLog ? Math.log10(v) : v)),
      };
    });
  }

  private computeDomain(series: Series[]): void {
    const xs = series.flatMap((s) => s.x).filter(Number.isFinite);
    const ys = series.flatMap((s) => s.y).filter(Number.isFinite);
    if (xs.length === 0) return;
    let [xlo, xhi] = [Math.min(...xs), Math.max(...xs)];
    let [ylo, yhi] = [Math.min(...ys), Math.max(...ys)];
    if (xhi === xlo) [xlo, xhi] = [xlo - 1, xhi + 1];
    if (yhi === ylo) [ylo, yhi] = [ylo - 1, yhi + 1];
    const pad = 0.05 * (yhi - ylo);
    this.xdom = [xlo, xhi];
    this.ydom = [ylo - pad, yhi + pad];
  }

  render(series: Series[], bars = false): string {
    const mapped = this.mapped(series);
    this.computeDomain(mapped);
    const o = this.lines;
    o.length = 0;
    o.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.w}" height="${this.h}" viewBox="0 0 ${this.w} ${this.h}" font-family="Helvetica,Arial,sans-serif" font-size="12">`,
    );
    o.push(`<rect width="${this.w}" height="${this.h}" fill="white"/>`);
    this.axes(o);
    if (bars) {
      this.drawBars(o, mapped);
    } else {
      this.drawLines(o, mapped);
    }
    this.legend(o, series);
    if (this.opts.title) {
      o.push(
        `<text x="${this.w / 2}" y="16" text-anchor="middle" font-size="13">${esc(this.opts.title)}</text>`,
      );
    }
    o.push("</svg>");
    return o.join("\n") + "\n";
  }

  private axes(o: string[]): void {
    const x0 = MARGIN.left;
    const x1 = this.w - MARGIN.right;
    const y0 = this.h - MARGIN.bottom;
    const y1 = MARGIN.top;
    const xticks = this.opts.xLog
      ? logTicks(this.xdom[0], this.xdom[1])
      : niceTicks(this.xdom[0], this.xdom[1], 6);
    const yticks = this.opts.yLog
      ? logTicks(this.ydom[0], this.ydom[1])
      : niceTicks(this.ydom[0], this.ydom[1]);
    for (const v of xticks) {
      const px = this.tx(v);
      o.push(
        `<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y1}" stroke="#dddddd"/>`,
      );
      o.push(
        `<text x="${fmt(px)}" y="${y0 + 16}" text-anchor="middle">${tickLabel(v, !!this.opts.xLog)}</text>`,
      );
    }
    for (const v of yticks) {
      const py = this.ty(v);
      o.push(
        `<line x1="${x0}" y1="${fmt(py)}" x2="${x1}" y2="${fmt(py)}" stroke="#dddddd"/>`,
      );
      o.push(
        `<text x="${x0 - 6}" y="${fmt(py + 4)}" text-anchor="end">${tickLabel(v, !!this.opts.yLog)}</text>`,
      );
    }
    o.push(
      `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="black"/>`,
    );
    o.push(
      `<text x="${(x0 + x1) / 2}" y="${this.h - 8}" text-anchor="middle">${esc(this.opts.xLabel)}</text>`,
    );
    o.push(
      `<text x="14" y="${(y0 + y1) / 2}" text-anchor="middle" transform="rotate(-90 14 ${(y0 + y1) / 2})">${esc(this.opts.yLabel)}</text>`,
    );
  }

  private drawLines(o: string[], series: Series[]): void {
    for (const s of series) {
      if (s.x.length === 0) continue;
      const pts = s.x
        .map((xv, i) => `${fmt(this.tx(xv))},${fmt(this.ty(s.y[i]))}`)
        .join(" ");
      const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
      o.push(
        `<polyline points="${pts}" fill="none" stroke="${s.color}" stroke-width="1.5"${dash}/>`,
      );
    }
  }

  private drawBars(o: string[], series: Series[]): void {
    for (const s of series) {
      if (s.x.length === 0) continue;
      const width = Math.max(
        6,
        (this.w - MARGIN.left - MARGIN.right) / (2 * s.x.length + 1),
      );
      const base = this.ty(Math.max(0, this.ydom[0]));
      s.x.forEach((xv, i) => {
        const px = this.tx(xv);
        const py = this.ty(s.y[i]);
        o.push(
          `<rect x="${fmt(px - width / 2)}" y="${fmt(py)}" width="${fmt(width)}" height="${fmt(base - py)}" fill="${s.color}" stroke="black"/>`,
        );
      });
    }
  }

  private legend(o: string[], series: Series[]): void {
    const entries = series.filter((s) => s.label.length > 0);
    entries.forEach((s, i) => {
      const y = MARGIN.top + 8 + 16 * i;
      const x = this.w - MARGIN.right - 150;
      const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
      o.push(
        `<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" stroke="${s.color}" stroke-width="1.5"${dash}/>`,
      );
      o.push(`<text x="${x + 28}" y="${y + 4}">${esc(s.label)}</text>`);
    });
  }
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
];
