// Overlay geometry. The registration contract is the plain affine map
//   screen = cropRelativeVertex * zoom + pan
// applied identically to the image and the polygon, so the overlay
// stays within 1 px of the pixels it annotates at integer zooms.

export interface ViewTransform {
  zoom: number;
  panX: number;
  panY: number;
}

export interface ScreenPoint {
  x: number;
  y: number;
}

export function toScreen(vertex: readonly number[], view: ViewTransform): ScreenPoint {
  return {
    x: (vertex[0] ?? 0) * view.zoom + view.panX,
    y: (vertex[1] ?? 0) * view.zoom + view.panY,
  };
}

export function toImage(p: ScreenPoint, view: ViewTransform): ScreenPoint {
  return {
    x: (p.x - view.panX) / view.zoom,
    y: (p.y - view.panY) / view.zoom,
  };
}

export function polygonPath(vertices: readonly number[][], view: ViewTransform): ScreenPoint[] {
  return vertices.map((v) => toScreen(v, view));
}

/** Zoom about a fixed screen point so the pixel under the cursor stays put. */
export function zoomAbout(
  view: ViewTransform,
  focus: ScreenPoint,
  nextZoom: number,
): ViewTransform {
  const clamped = Math.min(32, Math.max(0.125, nextZoom));
  const anchor = toImage(focus, view);
  return {
    zoom: clamped,
    panX: focus.x - anchor.x * clamped,
    panY: focus.y - anchor.y * clamped,
  };
}

export function pan(view: ViewTransform, dx: number, dy: number): ViewTransform {
  return { ...view, panX: view.panX + dx, panY: view.panY + dy };
}

/** Initial transform: integer zoom when the crop fits at one, else the
 * largest fit, centered in the viewport. */
export function fitView(
  cropW: number,
  cropH: number,
  viewW: number,
  viewH: number,
): ViewTransform {
  const fit = Math.min(viewW / cropW, viewH / cropH);
  const zoom = fit >= 1 ? Math.max(1, Math.floor(fit)) : fit;
  return {
    zoom,
    panX: (viewW - cropW * zoom) / 2,
    panY: (viewH - cropH * zoom) / 2,
  };
}

export interface DrawRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

/** The rectangle drawImage receives for the crop bitmap. Vertices are
 * mapped with toScreen; both must describe the same transform or the
 * overlay drifts off the pixels. */
export function imageDrawRect(cropW: number, cropH: number, view: ViewTransform): DrawRect {
  return {
    x: view.panX,
    y: view.panY,
    w: cropW * view.zoom,
    h: cropH * view.zoom,
  };
}
