/**
 * Payload types for the episodic-index service JSON API (schema_version 1).
 *
 * Every response body carries `schema_version`; the client refuses to work
 * with a version it does not understand rather than mis-render numbers.
 */

export const SUPPORTED_SCHEMA_VERSION = 1;

export type Versioned = {
  schema_version: number;
};

export type ErrorBody = Versioned & {
  error: {
    reason: string;
    detail: string;
  };
};

export type SessionCreated = Versioned & {
  id: string;
};

export type SignalSummary = Versioned & {
  name: string;
  resolution: string;
  observations: number;
  start: string;
  end: string;
};

export type EpisodeRow = {
  id: number;
  start: string;
  end: string;
  n: number;
  tau: number;
  ongoing: boolean;
  intensity_mean: number | null;
};

export type LollipopPoint = {
  id: number;
  start: string;
  intensity_mean: number | null;
  duration: number;
  in_season: boolean;
};

export type EpisodeSetSummary = Versioned & {
  name: string;
  source: string;
  count: number;
  season: string | null;
};

export type EpisodeTable = EpisodeSetSummary & {
  episodes: EpisodeRow[];
  lollipop: LollipopPoint[];
};

export type WeightConfig = {
  m: number;
  a: number;
  b: number;
  c: number;
  d: number;
};

export type IndexSeriesPayload = Versioned & {
  name: string;
  anchors: string[];
  values: number[];
  episode_counts: number[];
};

export type MapRecord = {
  m: number;
  a: number;
  b: number;
  c: number;
  d: number;
  r: number | null;
  p: number | null;
  n: number;
  defined: boolean;
  reason: string;
};

export type JobStatus = "queued" | "running" | "done" | "error";

export type CalibrationPoll = Versioned & {
  job: string;
  status: JobStatus;
  error?: string;
  stage?: string;
  fixed?: Record<string, unknown>;
  records?: MapRecord[];
  selection?: SelectionRecord;
};

export type SelectionRecord = {
  configuration: WeightConfig;
  rule: "max_abs_r" | "manual";
  rationale: string;
  stable: boolean;
  r: number | null;
  p: number | null;
  selected_at: string;
};

export type AssociationReport = {
  r: number;
  p: number;
  n: number;
  slope: number;
  intercept: number;
  r_squared: number;
  dropped_left: number;
  dropped_right: number;
};

export type AssociationPayload = Versioned & {
  association: AssociationReport;
  scatter: { x: number; y: number }[];
};

export type EpisodeRequest = {
  name: string;
  method: "threshold" | "climatology" | "periodic" | "load";
  signal?: string;
  threshold?: number;
  direction?: "up" | "down";
  min_duration?: number;
  season?: string;
  baseline?: [number, number];
  percentile?: number;
  csv?: string;
  resolution?: string;
};

export type IndexRequest = {
  name: string;
  episodes: string;
  params: Partial<WeightConfig> & { m: number };
  timing_season?: string;
  kind?: string;
  anchors: string | string[];
  edge?: "truncate" | "drop";
};

export type CalibrationRequest = {
  stage: 1 | 2 | 3;
  episodes: string;
  m_list: number[];
  a?: number;
  a_grid?: number[];
  b_grid?: number[];
  c_grid?: number[];
  d_grid?: number[];
  season?: string;
  anchors: string | string[];
  response: string;
  log_response?: boolean;
  kind?: string;
  edge?: "truncate" | "drop";
  jobs?: number;
};

export type SelectionRequest = {
  rule: "max_abs_r" | "manual";
  rationale: string;
  stability_radius?: number;
  manual_config?: WeightConfig;
};
