/**
 * Axis scales: data interval -> pixel interval, linear or base-10 log,
 * with tick placement.  Everything here is a pure function of its inputs
 * so rendered figures are reproducible byte for byte.
 */

export type AxisKind = "linear" | "log";

export interface Scale {
  kind: AxisKind;
  /** Data-space domain [lo, hi]. */
  domain: [number, number];
  /** Pixel-space range [lo, hi] (may be decreasing for y axes). */
  range: [number, number];
  map(value: number): number;
  ticks(): number[];
}

/** A 1-2-5 progression step so linear ticks land on round values. */
function niceStep(span: number, target: number): number {
  const raw = span / Math.max(target, 1);
  const power = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (m * power >= raw) return m * power;
  }
  return 10 * power;
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  if (!(Number.isFinite(d0) && Number.isFinite(d1)) || d1 <= d0) {
    throw new Error(`linear scale needs a finite increasing domain, got [${d0}, ${d1}]`);
  }
  const slope = (r1 - r0) / (d1 - d0);
  return {
    kind: "linear",
    domain,
    range,
    map: (v) => r0 + (v - d0) * slope,
    ticks: () => {
      const step = niceStep(d1 - d0, 5);
      const first = Math.ceil(d0 / step) * step;
      const out: number[] = [];
      for (let v = first; v <= d1 + 1e-12 * step; v += step) {
        out.push(Math.abs(v) < 1e-12 * step ? 0 : v);
      }
      return out;
    },
  };
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  if (!(d0 > 0 && d1 > d0)) {
    throw new Error(`log scale needs a positive increasing domain, got [${d0}, ${d1}]`);
  }
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const slope = (r1 - r0) / (l1 - l0);
  return {
    kind: "log",
    domain,
    range,
    map: (v) => r0 + (Math.log10(v) - l0) * slope,
    ticks: () => {
      const out: number[] = [];
      // Decade marks; if the domain spans many decades, label every k-th
      // so tick text stays readable.
      const lo = Math.ceil(l0 - 1e-9);
      const hi = Math.floor(l1 + 1e-9);
      const stride = Math.max(1, Math.ceil((hi - lo) / 8));
      for (let e = lo; e <= hi; e += stride) out.push(Math.pow(10, e));
      return out.length > 0 ? out : [d0, d1];
    },
  };
}

export function makeScale(kind: AxisKind, domain: [number, number], range: [number, number]): Scale {
  return kind === "log" ? logScale(domain, range) : linearScale(domain, range);
}

/** Compact deterministic tick label (`0.02`, `1e-6`, `300`). */
export function tickLabel(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e-3 && abs < 1e4) {
    // Round away float noise, then strip trailing zeros.
    return String(Number(value.toPrecision(10)));
  }
  const exp = Math.floor(Math.log10(abs));
  const mantissa = Number((value / Math.pow(10, exp)).toPrecision(10));
  return mantissa === 1 ? `1e${exp}` : `${mantissa}e${exp}`;
}

/**
 * The data domain of a set of values, padded multiplicatively (log) or
 * additively (linear) so curves do not touch the frame.
 */
export function dataDomain(kind: AxisKind, values: number[]): [number, number] {
  const usable = values.filter((v) => Number.isFinite(v) && (kind !== "log" || v > 0));
  if (usable.length === 0) {
    throw new Error(`no ${kind === "log" ? "positive " : ""}finite values to scale`);
  }
  let lo = Math.min(...usable);
  let hi = Math.max(...usable);
  if (kind === "log") {
    lo /= 1.5;
    hi *= 1.5;
  } else {
    const pad = (hi - lo || Math.abs(hi) || 1) * 0.05;
    lo -= pad;
    hi += pad;
  }
  return [lo, hi];
}
