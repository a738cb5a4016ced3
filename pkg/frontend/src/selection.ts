/** Electrode selection: click toggling and freehand lasso regions over the
 * electrode map. Lasso membership is decided by each electrode's center
 * point against the sketched polygon (even-odd ray casting). */

export interface Point {
  x: number;
  y: number;
}

export interface ElectrodePosition {
  id: number;
  x: number;
  y: number;
}

/** Even-odd rule point-in-polygon test; points exactly on an edge count as
 * inside for the vertical-ray crossings they generate. */
export function pointInPolygon(point: Point, polygon: Point[]): boolean {
  if (polygon.length < 3) return false;
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i];
    const b = polygon[j];
    const crosses =
      a.y > point.y !== b.y > point.y &&
      point.x < ((b.x - a.x) * (point.y - a.y)) / (b.y - a.y) + a.x;
    if (crosses) inside = !inside;
  }
  return inside;
}

/** Ids of all electrodes whose centers fall inside the lasso polygon,
 * ascending. A degenerate lasso (fewer than 3 points) selects nothing. */
export function lassoSelect(
  electrodes: ElectrodePosition[],
  polygon: Point[],
): number[] {
  if (polygon.length < 3) return [];
  return electrodes
    .filter((e) => pointInPolygon({ x: e.x, y: e.y }, polygon))
    .map((e) => e.id)
    .sort((a, b) => a - b);
}

/** Click toggle: add the id if absent, remove it if present. Returns a new
 * set; unknown ids are the caller's concern (the map layer warns). */
export function toggleSelection(selection: Set<number>, id: number): Set<number> {
  const next = new Set(selection);
  if (next.has(id)) {
    next.delete(id);
  } else {
    next.add(id);
  }
  return next;
}

const CIRCLE_PATTERN = /<circle\b[^>]*class="electrode"[^>]*>/g;

function attr(tag: string, name: string): string | null {
  const match = tag.match(new RegExp(`${name}="([^"]*)"`));
  return match ? match[1] : null;
}

/** Extract electrode centers from the service's map SVG (one
 * `class="electrode"` circle per site carrying `data-electrode-id`).
 * Malformed circles are skipped with a console warning. */
export function parseElectrodeMap(svg: string): ElectrodePosition[] {
  const out: ElectrodePosition[] = [];
  for (const tag of svg.match(CIRCLE_PATTERN) ?? []) {
    const id = Number(attr(tag, "data-electrode-id"));
    const x = Number(attr(tag, "cx"));
    const y = Number(attr(tag, "cy"));
    if (!Number.isInteger(id) || !Number.isFinite(x) || !Number.isFinite(y)) {
      console.warn(`skipping malformed electrode circle: ${tag}`);
      continue;
    }
    out.push({ id, x, y });
  }
  return out;
}
