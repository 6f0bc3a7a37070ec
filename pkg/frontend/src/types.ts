export interface ShapeSummary {
  id: string;
  family: string;
  handles: number;
}

export interface HandleMeta {
  part: number;
  kind: "translation" | "scale";
  axis: number;
}

export interface PartBox {
  center: number[];
  axes: number[][];
  extents: number[];
  point_ids: number[];
}

export interface ShapeDetail {
  id: string;
  points: number[][];
  parts: PartBox[];
  handles: HandleMeta[];
  defaults: number[];
  lower_bounds: (number | null)[];
}

export interface ProjectResponse {
  z_hat: number[];
  points: number[][];
}

export interface TransferResponse {
  points: number[][];
}

export interface ModelInfo {
  n: number;
  k: number;
  variant: string;
}
