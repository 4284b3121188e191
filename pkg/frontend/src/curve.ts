/** Parse the CLI's exported trade-off curve and place thresholds on it.
 *
 * Display-only: every number shown in the overlay comes straight from the
 * file; nothing is recomputed here.
 */

import { CurvePoint, TradeoffCurve, parseThreshold } from "./types.js";

export const CURVE_HEADER = "threshold,swift_ratio,accuracy,expected_flops,flops_speedup";

function numberCell(cell: string, line: number, name: string): number {
  const value = Number(cell);
  if (cell.trim() === "" || Number.isNaN(value)) {
    throw new Error(`curve line ${line}: bad ${name} value ${JSON.stringify(cell)}`);
  }
  return value;
}

export function parseCurveCsv(text: string): TradeoffCurve {
  const lines = text.split(/\r?\n/).filter((line) => line.trim() !== "");
  if (lines.length === 0 || lines[0] !== CURVE_HEADER) {
    throw new Error(`curve file must start with header "${CURVE_HEADER}"`);
  }
  const points: CurvePoint[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== 5) {
      throw new Error(`curve line ${i + 1}: expected 5 cells, got ${cells.length}`);
    }
    points.push({
      threshold: parseThreshold(cells[0]),
      swiftRatio: numberCell(cells[1], i + 1, "swift_ratio"),
      accuracy: cells[2].trim() === "" ? null : numberCell(cells[2], i + 1, "accuracy"),
      expectedFlops: numberCell(cells[3], i + 1, "expected_flops"),
      flopsSpeedup: numberCell(cells[4], i + 1, "flops_speedup"),
    });
  }
  if (points.length === 0) throw new Error("curve file has no rows");
  for (let i = 1; i < points.length; i++) {
    if (points[i].threshold <= points[i - 1].threshold) {
      throw new Error("curve thresholds must be strictly increasing");
    }
  }
  return { points };
}

/** The curve row a live threshold operates at.
 *
 * Routing is piecewise constant between grid thresholds: any threshold in
 * (previous row, this row] routes exactly like this row, so the marker for
 * a threshold taken from the file lands on that very row.
 */
export function operatingPointFor(curve: TradeoffCurve, threshold: number): CurvePoint {
  for (const point of curve.points) {
    if (point.threshold >= threshold) return point;
  }
  return curve.points[curve.points.length - 1];
}
