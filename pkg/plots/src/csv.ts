// Readers for the two CSV schemas emitted by the simulation pipeline.

export interface StatsRow {
  step: number;
  channel: string;
  cls: string;
  mean: number;
  std: number;
}

export interface Point {
  x: number;
  y: number;
}

export const CHANNELS = ["M1x", "M1y", "M2x", "M2y", "M3x", "M3y", "M4x", "M4y"];

function splitLines(text: string): string[][] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.trim().length > 0)
    .map((line) => line.split(",").map((c) => c.trim()));
}

/** Parse a class-stats CSV: step,channel,class,mean,std. */
export function parseStatsCsv(text: string): StatsRow[] {
  const rows = splitLines(text);
  if (rows.length === 0) throw new Error("empty stats CSV");
  const header = rows[0];
  const expect = ["step", "channel", "class", "mean", "std"];
  if (header.join(",") !== expect.join(",")) {
    throw new Error(`bad stats header: ${header.join(",")}`);
  }
  return rows.slice(1).map((cells, i) => {
    if (cells.length !== 5) throw new Error(`stats row ${i + 2}: expected 5 columns`);
    const row = {
      step: Number(cells[0]),
      channel: cells[1],
      cls: cells[2],
      mean: Number(cells[3]),
      std: Number(cells[4]),
    };
    if (!Number.isFinite(row.step) || !Number.isFinite(row.mean) || !Number.isFinite(row.std)) {
      throw new Error(`stats row ${i + 2}: non-numeric value`);
    }
    return row;
  });
}

/** Parse a positions CSV: x,y rows. */
export function parsePositionsCsv(text: string): Point[] {
  const rows = splitLines(text);
  if (rows.length === 0) throw new Error("empty positions CSV");
  if (rows[0].join(",") !== "x,y") throw new Error(`bad positions header: ${rows[0].join(",")}`);
  return rows.slice(1).map((cells, i) => {
    const p = { x: Number(cells[0]), y: Number(cells[1]) };
    if (cells.length !== 2 || !Number.isFinite(p.x) || !Number.isFinite(p.y)) {
      throw new Error(`positions row ${i + 2}: expected two numbers`);
    }
    return p;
  });
}

export interface ChannelSeries {
  cls: string;
  steps: number[];
  mean: number[];
  std: number[];
}

/** Collect one channel's per-class time series, step-ordered. */
export function channelSeries(rows: StatsRow[], channel: string): ChannelSeries[] {
  if (!CHANNELS.includes(channel)) {
    throw new Error(`unknown channel ${channel}; expected one of ${CHANNELS.join(", ")}`);
  }
  const byClass = new Map<string, StatsRow[]>();
  for (const row of rows) {
    if (row.channel !== channel) continue;
    const bucket = byClass.get(row.cls) ?? [];
    bucket.push(row);
    byClass.set(row.cls, bucket);
  }
  if (byClass.size === 0) throw new Error(`channel ${channel} not present in stats`);
  return [...byClass.keys()].sort().map((cls) => {
    const bucket = byClass.get(cls)!.slice().sort((a, b) => a.step - b.step);
    return {
      cls,
      steps: bucket.map((r) => r.step),
      mean: bucket.map((r) => r.mean),
      std: bucket.map((r) => r.std),
    };
  });
}
