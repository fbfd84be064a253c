/**
 * Campaign directory discovery.
 *
 * A campaign directory is what the runner writes: `aggregate.csv`,
 * `manifest.json`, `snapshot.csv`, `run_*.csv`.  The plot command also
 * accepts a parent directory holding several campaign subdirectories (for
 * example one per data-selection method); every campaign found is drawn,
 * colored by its method.
 */

import { existsSync, readFileSync, readdirSync, statSync } from "node:fs";
import { join } from "node:path";

import { AggregateTable, loadAggregate } from "./aggregate.js";

/** Data-selection methods of the runner, in canonical drawing order. */
export const METHOD_ORDER = ["eki_full", "single_subsampling", "batch_subsampling"] as const;
export type Method = (typeof METHOD_ORDER)[number];

/** Caption color convention: full-data red, single blue, batch green. */
export const METHOD_COLORS: Record<Method, string> = {
  eki_full: "#d62728",
  single_subsampling: "#1f77b4",
  batch_subsampling: "#2ca02c",
};

export const METHOD_LABELS: Record<Method, string> = {
  eki_full: "full data",
  single_subsampling: "single subsampling",
  batch_subsampling: "batch subsampling",
};

/** One loaded campaign: aggregate data plus identity from the manifest. */
export interface Campaign {
  dir: string;
  name: string;
  method: Method;
  color: string;
  label: string;
  aggregate: AggregateTable;
}

/** Rows of snapshot.csv: grid, truth, reference and final ensemble mean. */
export interface Snapshot {
  x: number[];
  truth: number[];
  thetaStar: number[];
  thetaMean: number[];
}

function isCampaignDir(dir: string): boolean {
  return existsSync(join(dir, "aggregate.csv"));
}

function loadOne(dir: string): Campaign {
  const manifestPath = join(dir, "manifest.json");
  if (!existsSync(manifestPath)) {
    throw new Error(`${dir}: campaign has no manifest.json`);
  }
  const manifest = JSON.parse(readFileSync(manifestPath, "utf8"));
  const method = manifest?.config?.method as Method | undefined;
  if (!method || !(method in METHOD_COLORS)) {
    throw new Error(`${dir}: manifest config.method is missing or unknown: ${method}`);
  }
  return {
    dir,
    name: String(manifest.name ?? dir),
    method,
    color: METHOD_COLORS[method],
    label: METHOD_LABELS[method],
    aggregate: loadAggregate(join(dir, "aggregate.csv")),
  };
}

/**
 * Load the campaign(s) under `dir`: either `dir` itself or its immediate
 * subdirectories.  Campaigns come back in canonical method order so the
 * figure layout is stable regardless of directory listing order.
 */
export function discoverCampaigns(dir: string): Campaign[] {
  if (!existsSync(dir) || !statSync(dir).isDirectory()) {
    throw new Error(`${dir}: not a directory`);
  }
  let dirs: string[];
  if (isCampaignDir(dir)) {
    dirs = [dir];
  } else {
    dirs = readdirSync(dir)
      .sort()
      .map((entry) => join(dir, entry))
      .filter((entry) => statSync(entry).isDirectory() && isCampaignDir(entry));
    if (dirs.length === 0) {
      throw new Error(`${dir}: no aggregate.csv here or in any subdirectory`);
    }
  }
  const campaigns = dirs.map(loadOne);
  campaigns.sort(
    (a, b) =>
      METHOD_ORDER.indexOf(a.method) - METHOD_ORDER.indexOf(b.method) ||
      a.name.localeCompare(b.name),
  );
  return campaigns;
}

/** Load a campaign's snapshot.csv (truth / reference / final mean). */
export function loadSnapshot(campaign: Campaign): Snapshot {
  const path = join(campaign.dir, "snapshot.csv");
  if (!existsSync(path)) {
    throw new Error(`${campaign.dir}: campaign has no snapshot.csv`);
  }
  const lines = readFileSync(path, "utf8").trim().split("\n");
  const header = lines.shift();
  if (header !== "x,truth,theta_star,theta_mean") {
    throw new Error(`${path}: unexpected snapshot header "${header}"`);
  }
  if (lines.length === 0) {
    throw new Error(`${path}: snapshot has no rows`);
  }
  const snapshot: Snapshot = { x: [], truth: [], thetaStar: [], thetaMean: [] };
  for (const line of lines) {
    const [x, truth, star, mean] = line.split(",").map(Number);
    if ([x, truth, star, mean].some((v) => v === undefined || Number.isNaN(v))) {
      throw new Error(`${path}: non-numeric snapshot row "${line}"`);
    }
    snapshot.x.push(x!);
    snapshot.truth.push(truth!);
    snapshot.thetaStar.push(star!);
    snapshot.thetaMean.push(mean!);
  }
  return snapshot;
}
