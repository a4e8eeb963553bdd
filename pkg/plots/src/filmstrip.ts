// Filmstrip of swarm snapshots: equal-aspect scatter panels in step order,
// axes pinned to the arena so aggregation progress reads left to right.

import { parsePositionsCsv, type Point } from "./csv.js";
import { scale, svgDocument, tag, text } from "./svg.js";

export interface Snapshot {
  label: string;
  points: Point[];
}

export interface FilmstripOptions {
  panelSize?: number;
  arena?: number;
  agentRadius?: number;
}

const GAP = 10;
const LABEL_H = 18;

export function renderFilmstrip(snapshots: Snapshot[], opts: FilmstripOptions = {}): string {
  if (snapshots.length === 0) throw new Error("at least one snapshot required");
  const panel = opts.panelSize ?? 220;
  const arena = opts.arena ?? 1000;
  const radius = opts.agentRadius ?? 5;

  const width = GAP + snapshots.length * (panel + GAP);
  const height = panel + LABEL_H + 2 * GAP;
  const parts: string[] = [];

  snapshots.forEach((snap, i) => {
    const x0 = GAP + i * (panel + GAP);
    const y0 = GAP + LABEL_H;
    const sx = scale(0, arena, x0, x0 + panel);
    // flip so larger y is up, matching the simulation's coordinate frame
    const sy = scale(0, arena, y0 + panel, y0);
    const r = Math.max(1, (radius / arena) * panel);
    const children: string[] = [
      tag("rect", {
        x: x0,
        y: y0,
        width: panel,
        height: panel,
        fill: "white",
        stroke: "#444",
        "stroke-width": 1,
      }),
      text(x0, GAP + 12, snap.label),
    ];
    for (const p of snap.points) {
      children.push(
        tag("circle", {
          cx: Math.round(sx(p.x) * 100) / 100,
          cy: Math.round(sy(p.y) * 100) / 100,
          r,
          fill: "#1f77b4",
          "fill-opacity": 0.8,
        }),
      );
    }
    parts.push(tag("g", { class: "panel", "data-label": snap.label }, children));
  });
  return svgDocument(width, height, parts);
}

export function snapshotFromCsv(label: string, csvText: string): Snapshot {
  return { label, points: parsePositionsCsv(csvText) };
}
