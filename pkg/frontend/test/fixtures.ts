/** Synthetic campaign directories for tests. */

import { mkdirSync, mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { Method } from "../src/campaign.js";

export interface SeriesSpec {
  name: string;
  mean: (t: number) => number;
  std?: (t: number) => number;
}

export interface CampaignSpec {
  name: string;
  method: Method;
  times?: number[];
  series?: SeriesSpec[];
  snapshot?: boolean;
}

/** Sample times hitting both axes' awkward spots: t = 0 and decades. */
export const DEFAULT_TIMES = [0, 1e-3, 1e-2, 1e-1, 0.3, 1, 3, 10];

export function defaultSeries(): SeriesSpec[] {
  const out: SeriesSpec[] = [
    { name: "param_error_mean", mean: (t) => 1 / (1 + t), std: (t) => 0.1 / (1 + t) },
    { name: "obs_misfit_mean", mean: (t) => 2 / (1 + t), std: (t) => 0.2 / (1 + t) },
    { name: "lambda_min", mean: (t) => 0.5 / (1 + 2 * t) },
    { name: "jumps", mean: (t) => Math.floor(20 * t) },
  ];
  for (let j = 1; j <= 5; j++) {
    out.push({
      name: `param_error_p${j}`,
      mean: (t) => (1 + 0.05 * j) / (1 + t),
    });
    out.push({
      name: `obs_misfit_p${j}`,
      mean: (t) => (2 + 0.05 * j) / (1 + t),
    });
    out.push({
      name: `collapse_p${j}`,
      mean: (t) => (1 + 0.1 * j) * Math.exp(-t),
    });
  }
  out.push({ name: "collapse_mean", mean: (t) => 1.3 * Math.exp(-t) });
  return out;
}

export function aggregateCsv(times: number[], series: SeriesSpec[], nRuns = 8): string {
  const lines = ["time,series_name,mean,std,n_runs"];
  for (const s of series) {
    for (const t of times) {
      const std = s.std ? s.std(t) : 0;
      lines.push(`${t},${s.name},${s.mean(t)},${std},${nRuns}`);
    }
  }
  return lines.join("\n") + "\n";
}

export function snapshotCsv(nGrid = 9): string {
  const lines = ["x,truth,theta_star,theta_mean"];
  for (let i = 1; i <= nGrid; i++) {
    const x = i / (nGrid + 1);
    const truth = Math.sin(2 * Math.PI * x);
    lines.push(`${x},${truth},${0.9 * truth},${0.95 * truth + 0.01}`);
  }
  return lines.join("\n") + "\n";
}

/** Write one synthetic campaign directory and return its path. */
export function makeCampaign(parent: string, spec: CampaignSpec): string {
  const dir = join(parent, spec.name);
  mkdirSync(dir, { recursive: true });
  const times = spec.times ?? DEFAULT_TIMES;
  const series = spec.series ?? defaultSeries();
  writeFileSync(join(dir, "aggregate.csv"), aggregateCsv(times, series));
  writeFileSync(
    join(dir, "manifest.json"),
    JSON.stringify({ name: spec.name, config: { method: spec.method } }, null, 2),
  );
  if (spec.snapshot !== false) {
    writeFileSync(join(dir, "snapshot.csv"), snapshotCsv());
  }
  return dir;
}

/** A parent directory holding one campaign per method. */
export function makeTriple(prefix = "subeki-plots-"): string {
  const parent = mkdtempSync(join(tmpdir(), prefix));
  makeCampaign(parent, { name: "full", method: "eki_full" });
  makeCampaign(parent, { name: "single", method: "single_subsampling" });
  makeCampaign(parent, { name: "batch", method: "batch_subsampling" });
  return parent;
}

export function tempDir(prefix = "subeki-plots-"): string {
  return mkdtempSync(join(tmpdir(), prefix));
}
