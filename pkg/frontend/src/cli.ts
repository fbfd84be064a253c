#!/usr/bin/env node
/**
 * Figure CLI for campaign directories written by the runner.
 *
 *   subeki-plot <campaign_dir> --kind error_pair --axes semilogy --out fig.svg
 *   subeki-plot <campaign_dir> --all --out figures/
 *
 * `<campaign_dir>` is a single campaign (contains aggregate.csv) or a parent
 * directory of several; with `--all` every figure kind is written as
 * `<kind>.svg` into the output directory.  Exit codes: 0 success, 2 bad
 * arguments or malformed inputs, 3 unexpected runtime failure.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import yargs from "yargs";

import { Campaign, discoverCampaigns, loadSnapshot, Snapshot } from "./campaign.js";
import {
  Axes,
  AXES_CHOICES,
  FIGURE_KINDS,
  FigureKind,
  prepareFigure,
  renderFigure,
} from "./figures.js";

export const EXIT_OK = 0;
export const EXIT_CONFIG = 2;
export const EXIT_RUNTIME = 3;

interface PlotArgs {
  campaign_dir: string;
  kind?: string;
  axes: string;
  out?: string;
  all: boolean;
}

function renderOne(
  kind: FigureKind,
  axes: Axes,
  campaigns: Campaign[],
  snapshots: () => Snapshot[],
  outPath: string,
): void {
  const figure = prepareFigure(
    kind,
    axes,
    campaigns,
    kind === "snapshot" ? snapshots() : undefined,
  );
  const svg = renderFigure(figure);
  mkdirSync(dirname(outPath) || ".", { recursive: true });
  writeFileSync(outPath, svg);
}

/** Run the CLI on explicit argv (exported so tests can call it in-process). */
export function main(argv: string[]): number {
  const parser = yargs(argv)
    .scriptName("subeki-plot")
    .usage("$0 <campaign_dir>", "render campaign CSVs as SVG figures", (cmd) =>
      cmd.positional("campaign_dir", {
        describe: "campaign directory (or parent of campaign directories)",
        type: "string",
        demandOption: true,
      }),
    )
    .option("kind", {
      describe: "figure kind to render",
      choices: FIGURE_KINDS as unknown as string[],
      type: "string",
    })
    .option("axes", {
      describe: "axis scales (snapshot figures are always linear)",
      choices: AXES_CHOICES as unknown as string[],
      default: "semilogy",
      type: "string",
    })
    .option("out", {
      describe: "output SVG file (or directory with --all)",
      type: "string",
    })
    .option("all", {
      describe: "render every figure kind as <kind>.svg into --out",
      default: false,
      type: "boolean",
    })
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    })
    .help();

  let args: PlotArgs;
  try {
    args = parser.parseSync() as unknown as PlotArgs;
  } catch (err) {
    process.stderr.write(`argument error: ${(err as Error).message}\n`);
    return EXIT_CONFIG;
  }

  try {
    if (!args.all && !args.kind) {
      throw new ConfigProblem("either --kind <k> or --all is required");
    }
    if (args.all && args.kind) {
      throw new ConfigProblem("--kind and --all are mutually exclusive");
    }
    const campaigns = wrapConfig(() => discoverCampaigns(args.campaign_dir));
    const axes = args.axes as Axes;
    // Snapshots are loaded lazily: only the snapshot kind needs them.
    let cached: Snapshot[] | null = null;
    const snapshots = () =>
      (cached ??= wrapConfig(() => campaigns.map((c) => loadSnapshot(c))));

    if (args.all) {
      const outDir = args.out ?? ".";
      for (const kind of FIGURE_KINDS) {
        const path = join(outDir, `${kind}.svg`);
        wrapConfig(() => renderOne(kind, axes, campaigns, snapshots, path));
        process.stdout.write(`wrote ${path}\n`);
      }
    } else {
      const kind = args.kind as FigureKind;
      const outPath = args.out ?? `${kind}.svg`;
      wrapConfig(() => renderOne(kind, axes, campaigns, snapshots, outPath));
      process.stdout.write(`wrote ${outPath}\n`);
    }
    return EXIT_OK;
  } catch (err) {
    if (err instanceof ConfigProblem) {
      process.stderr.write(`error: ${err.message}\n`);
      return EXIT_CONFIG;
    }
    process.stderr.write(`unexpected error: ${(err as Error).stack ?? err}\n`);
    return EXIT_RUNTIME;
  }
}

/** Input/validation failures that should exit with the config code. */
class ConfigProblem extends Error {}

function wrapConfig<T>(fn: () => T): T {
  try {
    return fn();
  } catch (err) {
    if (err instanceof ConfigProblem) throw err;
    throw new ConfigProblem((err as Error).message);
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
