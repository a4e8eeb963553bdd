// Moment-vs-step band figure: one mean curve per class with mean+-std
// envelope curves, the standard view for telling outcome classes apart.

import { channelSeries, parseStatsCsv, type ChannelSeries } from "./csv.js";
import { PALETTE, polyline, round, scale, svgDocument, tag, text } from "./svg.js";

export interface BandOptions {
  width?: number;
  height?: number;
  title?: string;
}

const MARGIN = { left: 60, right: 16, top: 28, bottom: 36 };

export function renderBands(statsCsv: string, channel: string, opts: BandOptions = {}): string {
  const series = channelSeries(parseStatsCsv(statsCsv), channel);
  const width = opts.width ?? 640;
  const height = opts.height ?? 400;

  const steps = series.flatMap((s) => s.steps);
  const lows = series.flatMap((s) => s.mean.map((m, i) => m - s.std[i]));
  const highs = series.flatMap((s) => s.mean.map((m, i) => m + s.std[i]));
  const x = scale(Math.min(...steps), Math.max(...steps), MARGIN.left, width - MARGIN.right);
  let v0 = Math.min(...lows);
  let v1 = Math.max(...highs);
  if (v0 === v1) {
    v0 -= 1;
    v1 += 1;
  }
  const pad = 0.05 * (v1 - v0);
  const y = scale(v0 - pad, v1 + pad, height - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    tag("rect", {
      x: MARGIN.left,
      y: MARGIN.top,
      width: width - MARGIN.left - MARGIN.right,
      height: height - MARGIN.top - MARGIN.bottom,
      fill: "white",
      stroke: "#444",
      "stroke-width": 1,
    }),
  );
  series.forEach((s, idx) => {
    parts.push(...classBand(s, idx, x, y));
  });
  parts.push(text(MARGIN.left, 18, opts.title ?? `${channel} over simulation steps`, 13));
  parts.push(text(width / 2 - 14, height - 8, "step"));
  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const lx = MARGIN.left + 10 + idx * 150;
    parts.push(tag("rect", { x: lx, y: MARGIN.top + 8, width: 12, height: 12, fill: color }));
    parts.push(text(lx + 16, MARGIN.top + 18, s.cls));
  });
  return svgDocument(width, height, parts);
}

function classBand(
  s: ChannelSeries,
  idx: number,
  x: (v: number) => number,
  y: (v: number) => number,
): string[] {
  const color = PALETTE[idx % PALETTE.length];
  const pts = (vals: number[]): Array<[number, number]> =>
    vals.map((v, i) => [x(s.steps[i]), y(v)]);
  const upper = s.mean.map((m, i) => m + s.std[i]);
  const lower = s.mean.map((m, i) => m - s.std[i]);
  const fill =
    pts(upper)
      .concat(pts(lower).reverse())
      .map(([px, py]) => `${round(px)},${round(py)}`)
      .join(" ");
  return [
    tag("polygon", {
      points: fill,
      fill: color,
      "fill-opacity": 0.12,
      stroke: "none",
      "data-role": "band-fill",
      "data-class": s.cls,
    }),
    polyline(pts(upper), {
      stroke: color,
      "stroke-width": 1,
      "stroke-dasharray": "4 3",
      "data-role": "envelope-upper",
      "data-class": s.cls,
    }),
    polyline(pts(lower), {
      stroke: color,
      "stroke-width": 1,
      "stroke-dasharray": "4 3",
      "data-role": "envelope-lower",
      "data-class": s.cls,
    }),
    polyline(pts(s.mean), {
      stroke: color,
      "stroke-width": 2,
      "data-role": "mean",
      "data-class": s.cls,
    }),
  ];
}
