/**
 * Reader for the runner's cross-run aggregate CSV.
 *
 * The contract is a tidy long table with the exact header
 * `time,series_name,mean,std,n_runs`: one row per (sample time, series).
 * Series names follow the runner's recording scheme, e.g.
 * `param_error_mean`, `obs_misfit_p3`, `collapse_p1`, `lambda_min`.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const AGGREGATE_HEADER = ["time", "series_name", "mean", "std", "n_runs"] as const;

/** One named series on the shared time axis. */
export interface SeriesColumn {
  times: number[];
  mean: number[];
  std: number[];
}

/** The whole aggregate file, indexed by series name. */
export interface AggregateTable {
  times: number[];
  names: string[];
  nRuns: number;
  series: Map<string, SeriesColumn>;
}

interface RawRow {
  time: number;
  series_name: string;
  mean: number;
  std: number;
  n_runs: number;
}

/** Parse aggregate CSV text; throws on a malformed or empty table. */
export function parseAggregate(text: string, source = "<string>"): AggregateTable {
  if (text.trim() === "") {
    throw new Error(`${source}: aggregate CSV is empty`);
  }
  const parsed = Papa.parse<RawRow>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  if (fields.join(",") !== AGGREGATE_HEADER.join(",")) {
    throw new Error(
      `${source}: unexpected aggregate CSV header "${fields.join(",")}" ` +
        `(expected "${AGGREGATE_HEADER.join(",")}")`,
    );
  }
  if (parsed.data.length === 0) {
    throw new Error(`${source}: aggregate CSV has a header but no rows`);
  }
  for (const err of parsed.errors) {
    throw new Error(`${source}: row ${err.row}: ${err.message}`);
  }

  const series = new Map<string, SeriesColumn>();
  const names: string[] = [];
  let nRuns: number | null = null;
  for (const row of parsed.data) {
    if (
      typeof row.time !== "number" ||
      typeof row.mean !== "number" ||
      typeof row.std !== "number" ||
      typeof row.n_runs !== "number" ||
      typeof row.series_name !== "string"
    ) {
      throw new Error(`${source}: non-numeric row ${JSON.stringify(row)}`);
    }
    nRuns ??= row.n_runs;
    let column = series.get(row.series_name);
    if (!column) {
      column = { times: [], mean: [], std: [] };
      series.set(row.series_name, column);
      names.push(row.series_name);
    }
    column.times.push(row.time);
    column.mean.push(row.mean);
    column.std.push(row.std);
  }

  const first = series.get(names[0]!)!;
  for (const name of names) {
    const col = series.get(name)!;
    if (col.times.length !== first.times.length) {
      throw new Error(`${source}: series "${name}" has a different number of samples`);
    }
  }
  return { times: first.times, names, nRuns: nRuns ?? 0, series };
}

/** Load and parse an aggregate CSV from disk. */
export function loadAggregate(path: string): AggregateTable {
  return parseAggregate(readFileSync(path, "utf8"), path);
}

/**
 * Look up several series at once; a single error lists every missing name
 * so one round trip reveals the whole gap.
 */
export function requireSeries(table: AggregateTable, wanted: string[]): SeriesColumn[] {
  const missing = wanted.filter((name) => !table.series.has(name));
  if (missing.length > 0) {
    throw new Error(
      `missing aggregate column${missing.length > 1 ? "s" : ""}: ${missing.join(", ")} ` +
        `(have: ${table.names.join(", ")})`,
    );
  }
  return wanted.map((name) => table.series.get(name)!);
}

/** Names matching a per-particle family, e.g. `collapse_p1 ... collapse_pN`. */
export function particleSeries(table: AggregateTable, prefix: string): string[] {
  const re = new RegExp(`^${prefix}_p(\\d+)$`);
  return table.names
    .filter((name) => re.test(name))
    .sort((a, b) => Number(re.exec(a)![1]) - Number(re.exec(b)![1]));
}
