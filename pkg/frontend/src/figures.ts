/**
 * Figure preparation and rendering.
 *
 * Preparation is a pure function from loaded campaign data to the exact
 * arrays that get drawn (`FigureData`); rendering turns those arrays into
 * an SVG string.  Splitting the two keeps every plotting rule testable on
 * plain data: log-axis filtering, band clipping, panel layout, colors.
 */

import { particleSeries, requireSeries } from "./aggregate.js";
import { Campaign, Snapshot } from "./campaign.js";
import { AxisKind, dataDomain, makeScale, tickLabel } from "./scale.js";
import { SvgDoc } from "./svg.js";

export type FigureKind = "error_pair" | "collapse_triptych" | "band_pair" | "snapshot";
export const FIGURE_KINDS: readonly FigureKind[] = [
  "error_pair",
  "collapse_triptych",
  "band_pair",
  "snapshot",
];

export type Axes = "semilogy" | "loglog";
export const AXES_CHOICES: readonly Axes[] = ["semilogy", "loglog"];

export interface LineMark {
  label: string;
  color: string;
  x: number[];
  y: number[];
  width?: number;
  dash?: string;
  opacity?: number;
}

export interface BandMark {
  label: string;
  color: string;
  x: number[];
  lo: number[];
  hi: number[];
}

export interface PanelData {
  title: string;
  xLabel: string;
  yLabel: string;
  xKind: AxisKind;
  yKind: AxisKind;
  lines: LineMark[];
  bands: BandMark[];
}

export interface LegendEntry {
  label: string;
  color: string;
  dash?: string;
}

export interface FigureData {
  kind: FigureKind;
  panels: PanelData[];
  legend: LegendEntry[];
}

function axisKinds(axes: Axes): { xKind: AxisKind; yKind: AxisKind } {
  return { xKind: axes === "loglog" ? "log" : "linear", yKind: "log" };
}

/** Drop points that a log axis cannot show (coordinate <= 0). */
function filterLine(mark: LineMark, xKind: AxisKind, yKind: AxisKind): LineMark {
  const x: number[] = [];
  const y: number[] = [];
  for (let i = 0; i < mark.x.length; i++) {
    const xi = mark.x[i]!;
    const yi = mark.y[i]!;
    if (!Number.isFinite(xi) || !Number.isFinite(yi)) continue;
    if (xKind === "log" && xi <= 0) continue;
    if (yKind === "log" && yi <= 0) continue;
    x.push(xi);
    y.push(yi);
  }
  return { ...mark, x, y };
}

/**
 * Clip a mean ± std band for a log y axis.  Points whose upper edge is
 * nonpositive are dropped; lower edges at or below zero are raised to one
 * decade under the smallest positive line value in the panel, so every
 * value handed to the renderer is strictly positive.
 */
function clipBand(mark: BandMark, xKind: AxisKind, yKind: AxisKind, floor: number): BandMark {
  const x: number[] = [];
  const lo: number[] = [];
  const hi: number[] = [];
  for (let i = 0; i < mark.x.length; i++) {
    const xi = mark.x[i]!;
    const loI = mark.lo[i]!;
    const hiI = mark.hi[i]!;
    if (![xi, loI, hiI].every(Number.isFinite)) continue;
    if (xKind === "log" && xi <= 0) continue;
    if (yKind === "log" && hiI <= 0) continue;
    x.push(xi);
    hi.push(hiI);
    lo.push(yKind === "log" && loI <= 0 ? Math.min(floor, hiI) : loI);
  }
  return { ...mark, x, lo, hi };
}

function finishPanel(panel: PanelData): PanelData {
  const lines = panel.lines.map((l) => filterLine(l, panel.xKind, panel.yKind));
  const linePositive = lines.flatMap((l) => l.y).filter((v) => v > 0);
  const floor = linePositive.length > 0 ? Math.min(...linePositive) / 10 : 1e-12;
  const bands = panel.bands.map((b) => clipBand(b, panel.xKind, panel.yKind, floor));
  return { ...panel, lines, bands };
}

function campaignLegend(campaigns: Campaign[]): LegendEntry[] {
  return campaigns.map((c) => ({ label: c.label, color: c.color }));
}

/** Mean distance to the reference: parameter panel left, observation right. */
export function prepareErrorPair(campaigns: Campaign[], axes: Axes): FigureData {
  const { xKind, yKind } = axisKinds(axes);
  const panels = (
    [
      ["parameter space", "param_error_mean"],
      ["observation space", "obs_misfit_mean"],
    ] as const
  ).map(([title, series]) =>
    finishPanel({
      title,
      xLabel: "time",
      yLabel: "mean error",
      xKind,
      yKind,
      lines: campaigns.map((c) => {
        const [col] = requireSeries(c.aggregate, [series]);
        return { label: c.label, color: c.color, x: col!.times, y: col!.mean };
      }),
      bands: [],
    }),
  );
  return { kind: "error_pair", panels, legend: campaignLegend(campaigns) };
}

/** Per-particle ensemble spread, one panel per campaign. */
export function prepareCollapseTriptych(campaigns: Campaign[], axes: Axes): FigureData {
  const { xKind, yKind } = axisKinds(axes);
  const panels = campaigns.map((c) => {
    const names = particleSeries(c.aggregate, "collapse");
    if (names.length === 0) {
      throw new Error(
        `missing aggregate columns: collapse_p1 ... collapse_pN ` +
          `(have: ${c.aggregate.names.join(", ")})`,
      );
    }
    const cols = requireSeries(c.aggregate, names);
    return finishPanel({
      title: c.label,
      xLabel: "time",
      yLabel: "particle spread",
      xKind,
      yKind,
      lines: cols.map((col, j) => ({
        label: `particle ${j + 1}`,
        color: c.color,
        opacity: 1.0 - (0.55 * j) / Math.max(1, cols.length - 1),
        x: col.times,
        y: col.mean,
      })),
      bands: [],
    });
  });
  return { kind: "collapse_triptych", panels, legend: campaignLegend(campaigns) };
}

/** Mean error with a mean ± standard-deviation band, parameter and observation panels. */
export function prepareBandPair(campaigns: Campaign[], axes: Axes): FigureData {
  const { xKind, yKind } = axisKinds(axes);
  const panels = (
    [
      ["parameter space", "param_error_mean"],
      ["observation space", "obs_misfit_mean"],
    ] as const
  ).map(([title, series]) =>
    finishPanel({
      title,
      xLabel: "time",
      yLabel: "mean error ± std",
      xKind,
      yKind,
      lines: campaigns.map((c) => {
        const [col] = requireSeries(c.aggregate, [series]);
        return { label: c.label, color: c.color, x: col!.times, y: col!.mean };
      }),
      bands: campaigns.map((c) => {
        const [col] = requireSeries(c.aggregate, [series]);
        return {
          label: c.label,
          color: c.color,
          x: col!.times,
          lo: col!.mean.map((m, i) => m - col!.std[i]!),
          hi: col!.mean.map((m, i) => m + col!.std[i]!),
        };
      }),
    }),
  );
  return { kind: "band_pair", panels, legend: campaignLegend(campaigns) };
}

/** Truth vs reference vs final ensemble mean on the grid, one panel per campaign. */
export function prepareSnapshot(campaigns: Campaign[], snapshots: Snapshot[]): FigureData {
  if (snapshots.length !== campaigns.length) {
    throw new Error("one snapshot per campaign is required");
  }
  const panels = campaigns.map((c, k) => {
    const snap = snapshots[k]!;
    return finishPanel({
      title: c.label,
      xLabel: "x",
      yLabel: "source",
      xKind: "linear",
      yKind: "linear",
      lines: [
        { label: "truth", color: "#000000", dash: "6 3", x: snap.x, y: snap.truth },
        { label: "reference", color: "#7f7f7f", x: snap.x, y: snap.thetaStar },
        { label: "ensemble mean", color: c.color, width: 2, x: snap.x, y: snap.thetaMean },
      ],
      bands: [],
    });
  });
  return {
    kind: "snapshot",
    panels,
    legend: [
      { label: "truth", color: "#000000", dash: "6 3" },
      { label: "reference", color: "#7f7f7f" },
      ...campaigns.map((c) => ({ label: `${c.label} mean`, color: c.color })),
    ],
  };
}

const PANEL_W = 360;
const PANEL_H = 280;
const MARGIN = { left: 70, right: 18, top: 34, bottom: 50 };
const GAP = 26;
const LEGEND_H = 26;

/** Render prepared figure data to a standalone SVG document. */
export function renderFigure(figure: FigureData): string {
  const n = figure.panels.length;
  const cellW = MARGIN.left + PANEL_W + MARGIN.right;
  const width = n * cellW + (n - 1) * GAP;
  const legendH = figure.legend.length > 0 ? LEGEND_H : 0;
  const height = legendH + MARGIN.top + PANEL_H + MARGIN.bottom;
  const doc = new SvgDoc(width, height);
  doc.rect(0, 0, width, height, { fill: "#ffffff" });

  let legendX = 8;
  for (const entry of figure.legend) {
    const y = LEGEND_H / 2 + 4;
    doc.line(legendX, y - 4, legendX + 26, y - 4, {
      stroke: entry.color,
      "stroke-width": 2,
      ...(entry.dash ? { "stroke-dasharray": entry.dash } : {}),
    });
    doc.text(legendX + 32, y, entry.label, { "font-size": 12, fill: "#222222" });
    legendX += 40 + 7 * entry.label.length;
  }

  figure.panels.forEach((panel, k) => {
    const originX = k * (cellW + GAP) + MARGIN.left;
    const originY = legendH + MARGIN.top;
    const xValues = [...panel.lines.flatMap((l) => l.x), ...panel.bands.flatMap((b) => b.x)];
    const yValues = [
      ...panel.lines.flatMap((l) => l.y),
      ...panel.bands.flatMap((b) => [...b.lo, ...b.hi]),
    ];
    const xScale = makeScale(panel.xKind, dataDomain(panel.xKind, xValues), [
      originX,
      originX + PANEL_W,
    ]);
    const yScale = makeScale(panel.yKind, dataDomain(panel.yKind, yValues), [
      originY + PANEL_H,
      originY,
    ]);

    for (const t of xScale.ticks()) {
      const x = xScale.map(t);
      doc.line(x, originY, x, originY + PANEL_H, { stroke: "#e6e6e6", "stroke-width": 1 });
      doc.line(x, originY + PANEL_H, x, originY + PANEL_H + 4, {
        stroke: "#333333",
        "stroke-width": 1,
      });
      doc.text(x, originY + PANEL_H + 17, tickLabel(t), {
        "font-size": 11,
        fill: "#333333",
        "text-anchor": "middle",
      });
    }
    for (const t of yScale.ticks()) {
      const y = yScale.map(t);
      doc.line(originX, y, originX + PANEL_W, y, { stroke: "#e6e6e6", "stroke-width": 1 });
      doc.line(originX - 4, y, originX, y, { stroke: "#333333", "stroke-width": 1 });
      doc.text(originX - 7, y + 4, tickLabel(t), {
        "font-size": 11,
        fill: "#333333",
        "text-anchor": "end",
      });
    }

    for (const band of panel.bands) {
      if (band.x.length < 2) continue;
      const forward = band.x.map((x, i) => [xScale.map(x), yScale.map(band.hi[i]!)]);
      const backward = band.x
        .map((x, i) => [xScale.map(x), yScale.map(band.lo[i]!)])
        .reverse();
      doc.polygon([...forward, ...backward] as Array<[number, number]>, {
        fill: band.color,
        "fill-opacity": 0.18,
        stroke: "none",
      });
    }
    for (const line of panel.lines) {
      if (line.x.length === 0) continue;
      doc.polyline(
        line.x.map((x, i) => [xScale.map(x), yScale.map(line.y[i]!)]),
        {
          stroke: line.color,
          "stroke-width": line.width ?? 1.5,
          ...(line.opacity !== undefined && line.opacity < 1
            ? { "stroke-opacity": Number(line.opacity.toFixed(3)) }
            : {}),
          ...(line.dash ? { "stroke-dasharray": line.dash } : {}),
        },
      );
    }

    doc.rect(originX, originY, PANEL_W, PANEL_H, {
      fill: "none",
      stroke: "#333333",
      "stroke-width": 1,
    });
    doc.text(originX + PANEL_W / 2, originY - 10, panel.title, {
      "font-size": 13,
      fill: "#111111",
      "text-anchor": "middle",
      "font-weight": "bold",
    });
    doc.text(originX + PANEL_W / 2, originY + PANEL_H + 36, panel.xLabel, {
      "font-size": 12,
      fill: "#333333",
      "text-anchor": "middle",
    });
    doc.text(originX - 52, originY + PANEL_H / 2, panel.yLabel, {
      "font-size": 12,
      fill: "#333333",
      "text-anchor": "middle",
      transform: `rotate(-90 ${originX - 52} ${originY + PANEL_H / 2})`,
    });
  });

  return doc.render();
}

/** Prepare any figure kind from loaded campaigns (+ snapshots where needed). */
export function prepareFigure(
  kind: FigureKind,
  axes: Axes,
  campaigns: Campaign[],
  snapshots?: Snapshot[],
): FigureData {
  switch (kind) {
    case "error_pair":
      return prepareErrorPair(campaigns, axes);
    case "collapse_triptych":
      return prepareCollapseTriptych(campaigns, axes);
    case "band_pair":
      return prepareBandPair(campaigns, axes);
    case "snapshot":
      return prepareSnapshot(campaigns, snapshots ?? []);
    default: {
      const never: never = kind;
      throw new Error(`unknown figure kind ${String(never)}`);
    }
  }
}
