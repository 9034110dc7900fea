/**
 * Thin typed client for the session service. All computation happens on the
 * server; this module only moves JSON and normalises errors.
 */

import {
  AssociationPayload,
  CalibrationPoll,
  CalibrationRequest,
  EpisodeRequest,
  EpisodeTable,
  ErrorBody,
  IndexRequest,
  IndexSeriesPayload,
  SelectionRecord,
  SelectionRequest,
  SessionCreated,
  SignalSummary,
  SUPPORTED_SCHEMA_VERSION,
  Versioned,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly reason: string;

  constructor(status: number, reason: string, detail: string) {
    super(detail);
    this.status = status;
    this.reason = reason;
  }
}

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{
  status: number;
  ok: boolean;
  json(): Promise<unknown>;
}>;

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn =
      fetchFn ?? ((url, init) => fetch(url, init) as ReturnType<FetchLike>);
  }

  private async request<T extends Versioned>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: Parameters<FetchLike>[1] = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    const payload = (await response.json()) as T | ErrorBody;
    if (!response.ok) {
      const err = (payload as ErrorBody).error;
      throw new ApiError(
        response.status,
        err?.reason ?? "unknown",
        err?.detail ?? `request failed with status ${response.status}`,
      );
    }
    if (payload.schema_version !== SUPPORTED_SCHEMA_VERSION) {
      throw new ApiError(
        response.status,
        "schema_mismatch",
        `server speaks schema ${payload.schema_version}, ` +
          `client supports ${SUPPORTED_SCHEMA_VERSION}`,
      );
    }
    return payload as T;
  }

  createSession(): Promise<SessionCreated> {
    return this.request("POST", "/sessions");
  }

  uploadSignal(
    sessionId: string,
    name: string,
    csv: string,
    resolution = "monthly",
  ): Promise<SignalSummary> {
    return this.request("POST", `/sessions/${sessionId}/signals`, {
      name,
      csv,
      resolution,
    });
  }

  defineEpisodes(sessionId: string, spec: EpisodeRequest): Promise<EpisodeTable> {
    return this.request("POST", `/sessions/${sessionId}/episodes`, spec);
  }

  getEpisodes(sessionId: string, name: string): Promise<EpisodeTable> {
    return this.request("GET", `/sessions/${sessionId}/episodes/${name}`);
  }

  buildIndex(sessionId: string, spec: IndexRequest): Promise<IndexSeriesPayload> {
    return this.request("POST", `/sessions/${sessionId}/index`, spec);
  }

  getIndex(sessionId: string, name: string): Promise<IndexSeriesPayload> {
    return this.request("GET", `/sessions/${sessionId}/index/${name}`);
  }

  async startCalibration(
    sessionId: string,
    spec: CalibrationRequest,
  ): Promise<string> {
    const body = await this.request<CalibrationPoll>(
      "POST",
      `/sessions/${sessionId}/calibrate`,
      spec,
    );
    return body.job;
  }

  pollCalibration(sessionId: string, jobId: string): Promise<CalibrationPoll> {
    return this.request("GET", `/sessions/${sessionId}/calibrate/${jobId}`);
  }

  /** Polls until the job leaves the queued/running states. */
  async waitForCalibration(
    sessionId: string,
    jobId: string,
    options: { intervalMs?: number; timeoutMs?: number } = {},
  ): Promise<CalibrationPoll> {
    const interval = options.intervalMs ?? 250;
    const deadline = Date.now() + (options.timeoutMs ?? 120_000);
    for (;;) {
      const poll = await this.pollCalibration(sessionId, jobId);
      if (poll.status === "done" || poll.status === "error") {
        return poll;
      }
      if (Date.now() > deadline) {
        throw new ApiError(0, "timeout", `calibration job ${jobId} timed out`);
      }
      await sleep(interval);
    }
  }

  async recordSelection(
    sessionId: string,
    jobId: string,
    spec: SelectionRequest,
  ): Promise<SelectionRecord> {
    const body = await this.request<Versioned & { selection: SelectionRecord }>(
      "POST",
      `/sessions/${sessionId}/calibrate/${jobId}/select`,
      spec,
    );
    return body.selection;
  }

  associate(
    sessionId: string,
    indexName: string,
    responseCsv: string,
    logResponse = false,
  ): Promise<AssociationPayload> {
    return this.request("POST", `/sessions/${sessionId}/associate`, {
      index: indexName,
      response: responseCsv,
      log_response: logResponse,
    });
  }
}
