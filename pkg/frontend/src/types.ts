// Service payload shapes, mirrored field for field. The service owns
// these schemas; nothing here is invented client-side.

export type ProposalStatus = 'pending' | 'accepted' | 'rejected';

export interface InspectionSummary {
  inspection_id: string;
  turbine_id: string;
  status: string;
  images: number;
  proposals: number;
  pending: number;
}

export interface TileRef {
  origin_x: number;
  origin_y: number;
  size: number;
}

export interface ProposalRow {
  proposal_id: string;
  image_id: string;
  confidence: number;
  vertices: number[][];
  tile: TileRef;
  status: ProposalStatus;
  assigned_severity: number | null;
}

export interface ProposalsDoc {
  inspection_id: string;
  proposals: ProposalRow[];
}

export interface DecisionRequest {
  decision_id: string;
  proposal_id: string;
  verdict: 'accepted' | 'rejected';
  analyst_id: string;
  assigned_severity?: number;
  refined_polygon?: number[][];
}

export interface DecisionResponse {
  decision: Record<string, unknown>;
  proposal_status: string;
}

export interface ReportCounts {
  accepted: number;
  rejected: number;
  pending: number;
}

export interface ReportDefect {
  proposal_id: string;
  image_id: string;
  blade_id: number;
  side: string;
  waypoint_index: number;
  severity: number;
  confidence: number;
  vertices: number[][];
}

export interface InspectionReport {
  schema_version: number;
  inspection_id: string;
  turbine_id: string;
  counts: ReportCounts;
  per_severity: Record<string, number>;
  pending: boolean;
  defects: ReportDefect[];
}

export interface CropResult {
  blob: Blob;
  cropOrigin: [number, number];
  polygon: number[][]; // crop-relative vertices from the X-Polygon header
  imageId: string;
}
