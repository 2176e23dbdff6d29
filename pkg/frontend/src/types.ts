// Wire types matching the server's JSON bodies.

export interface PlacementSpec {
  x: number;
  y: number;
  scale: number;
  canvas_size: [number, number]; // width, height
}

export type StageName = 'colorize' | 'compose' | 'refine';

export type SessionStage =
  | 'created'
  | 'placed'
  | 'colorized'
  | 'composed'
  | 'refined'
  | 'done';

export interface SessionView {
  id: string;
  stage: SessionStage;
  pending_stage: StageName | null;
  assets: Record<string, string>;
  placement: PlacementSpec | null;
  prompt_spec: Record<string, string>;
  config: Record<string, unknown>;
  canvas_size: [number, number] | null;
  variants: Partial<Record<StageName, string[]>>;
  selections: Partial<Record<StageName, number>>;
  colorize_ran: boolean;
  result_digest: string | null;
}

export interface JobTicket {
  id: string;
  session_id: string;
  stage: string;
  status: 'queued' | 'running' | 'succeeded' | 'failed';
  progress: number;
  error: string | null;
}

export interface PlacementResponse {
  placement: PlacementSpec;
  preview_ref: string;
  mask_ref: string;
}

export interface UploadResponse {
  ref: string;
  kind: string;
  size: [number, number];
  canvas_size: [number, number] | null;
}

export interface VariantList {
  stage: StageName;
  refs: string[];
  selected: number | null;
}

export interface ResultResponse {
  image_ref: string;
  manifest: Record<string, unknown>;
  stage_thumbnails: string[];
}

export interface PromptResponse {
  prompt_spec: Record<string, string>;
  prompt: string;
}
