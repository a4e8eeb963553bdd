// Minimal SVG string building; the figures need nothing a DOM would add.

export function tag(
  name: string,
  attrs: Record<string, string | number>,
  children: string[] = [],
): string {
  const attrText = Object.entries(attrs)
    .map(([k, v]) => `${k}="${v}"`)
    .join(" ");
  if (children.length === 0) return `<${name} ${attrText}/>`;
  return `<${name} ${attrText}>\n${children.join("\n")}\n</${name}>`;
}

export function svgDocument(width: number, height: number, children: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">\n${children.join("\n")}\n</svg>\n`
  );
}

export function polyline(
  points: Array<[number, number]>,
  attrs: Record<string, string | number>,
): string {
  const pts = points.map(([x, y]) => `${round(x)},${round(y)}`).join(" ");
  return tag("polyline", { points: pts, fill: "none", ...attrs });
}

export function text(x: number, y: number, content: string, size = 11): string {
  return `<text x="${round(x)}" y="${round(y)}" font-size="${size}" font-family="sans-serif">${escapeXml(content)}</text>`;
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function round(v: number): number {
  return Math.round(v * 100) / 100;
}

/** Linear map from a data interval to a pixel interval. */
export function scale(d0: number, d1: number, p0: number, p1: number): (v: number) => number {
  const span = d1 - d0 || 1;
  return (v) => p0 + ((v - d0) / span) * (p1 - p0);
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
