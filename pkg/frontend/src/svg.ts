/**
 * Minimal deterministic SVG assembly.  Attributes are emitted in the order
 * given, pixel coordinates are printed with a fixed precision, and nothing
 * here consults clocks or randomness, so a figure is a pure function of the
 * drawing calls.
 */

export function px(value: number): string {
  // Fixed two-decimal pixels keep files small and output byte-stable.
  const s = value.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

function escapeText(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export type Attrs = Record<string, string | number>;

function tag(name: string, attrs: Attrs, content?: string): string {
  const parts = Object.entries(attrs).map(([k, v]) => `${k}="${v}"`);
  const open = `<${name}${parts.length ? " " + parts.join(" ") : ""}`;
  return content === undefined ? `${open}/>` : `${open}>${content}</${name}>`;
}

/** An SVG document under construction. */
export class SvgDoc {
  private readonly parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  polyline(points: Array<[number, number]>, attrs: Attrs): void {
    const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
    this.parts.push(tag("polyline", { points: pts, fill: "none", ...attrs }));
  }

  /** Closed filled region, e.g. a mean ± std band. */
  polygon(points: Array<[number, number]>, attrs: Attrs): void {
    const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
    this.parts.push(tag("polygon", { points: pts, ...attrs }));
  }

  line(x1: number, y1: number, x2: number, y2: number, attrs: Attrs): void {
    this.parts.push(
      tag("line", { x1: px(x1), y1: px(y1), x2: px(x2), y2: px(y2), ...attrs }),
    );
  }

  rect(x: number, y: number, w: number, h: number, attrs: Attrs): void {
    this.parts.push(
      tag("rect", { x: px(x), y: px(y), width: px(w), height: px(h), ...attrs }),
    );
  }

  text(x: number, y: number, content: string, attrs: Attrs): void {
    this.parts.push(
      tag(
        "text",
        { x: px(x), y: px(y), "font-family": "sans-serif", ...attrs },
        escapeText(content),
      ),
    );
  }

  render(): string {
    const head = tag(
      "svg",
      {
        xmlns: "http://www.w3.org/2000/svg",
        width: this.width,
        height: this.height,
        viewBox: `0 0 ${this.width} ${this.height}`,
      },
      "\n" + this.parts.join("\n") + "\n",
    );
    return head + "\n";
  }
}
