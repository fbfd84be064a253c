export {
  AGGREGATE_HEADER,
  AggregateTable,
  loadAggregate,
  parseAggregate,
  particleSeries,
  requireSeries,
  SeriesColumn,
} from "./aggregate.js";
export {
  Campaign,
  discoverCampaigns,
  loadSnapshot,
  METHOD_COLORS,
  METHOD_LABELS,
  METHOD_ORDER,
  Method,
  Snapshot,
} from "./campaign.js";
export {
  Axes,
  AXES_CHOICES,
  BandMark,
  FIGURE_KINDS,
  FigureData,
  FigureKind,
  LegendEntry,
  LineMark,
  PanelData,
  prepareBandPair,
  prepareCollapseTriptych,
  prepareErrorPair,
  prepareFigure,
  prepareSnapshot,
  renderFigure,
} from "./figures.js";
export { AxisKind, dataDomain, linearScale, logScale, makeScale, Scale, tickLabel } from "./scale.js";
export { SvgDoc, px } from "./svg.js";
export { main } from "./cli.js";
