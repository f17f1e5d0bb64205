/** Nearest-placement lookup for click selection. */

import type { Placement } from "./types.js";

/**
 * Euclidean nearest placement to a map-space point.  Ties break toward the
 * lexicographically smaller path so clicks resolve deterministically.
 * Returns null when there are no placements.
 */
export function nearestPlacement(
  placements: Placement[],
  x: number,
  y: number,
): Placement | null {
  let best: Placement | null = null;
  let bestDist = Infinity;
  for (const p of placements) {
    const dx = p.x - x;
    const dy = p.y - y;
    const dist = dx * dx + dy * dy;
    if (
      dist < bestDist ||
      (dist === bestDist && best !== null && p.path < best.path)
    ) {
      best = p;
      bestDist = dist;
    }
  }
  return best;
}
