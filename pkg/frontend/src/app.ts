/**
 * Single-page UI shell: wires the workflow state machine to the API client
 * and renders each tab into #root. All values shown are echoed from server
 * payloads; this file contains layout and event plumbing only.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  lollipopMarks,
  mapPanels,
  polylinePath,
  regressionLine,
  stageOneCurves,
  topCell,
  linearScale,
  extent,
} from "./charts.js";
import {
  activateTab,
  addEpisodeSet,
  addIndex,
  addSignal,
  applySelection,
  canSubmitSelection,
  draftProblems,
  enabledTabs,
  initialState,
  setResponseLoaded,
  setSession,
  stageUnlocked,
  StageNumber,
  TAB_ORDER,
  TabKey,
  WorkflowState,
} from "./state.js";
import {
  CalibrationPoll,
  EpisodeTable,
  IndexSeriesPayload,
  MapRecord,
} from "./types.js";

const TAB_LABELS: Record<TabKey, string> = {
  data: "Data",
  episodes: "Episodes",
  index: "Index",
  calibration: "Calibration",
  application: "Application",
};

type AppData = {
  episodeTables: Map<string, EpisodeTable>;
  indexSeries: Map<string, IndexSeriesPayload>;
  responseCsv: string | null;
  stageJobs: Partial<Record<StageNumber, string>>;
  stageMaps: Partial<Record<StageNumber, MapRecord[]>>;
};

export class App {
  private state: WorkflowState = initialState();
  private readonly data: AppData = {
    episodeTables: new Map(),
    indexSeries: new Map(),
    responseCsv: null,
    stageJobs: {},
    stageMaps: {},
  };

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    const session = await this.api.createSession();
    this.state = setSession(this.state, session.id);
    this.render();
  }

  private setState(next: WorkflowState): void {
    this.state = next;
    this.render();
  }

  private showError(err: unknown): void {
    const box = this.root.querySelector(".error-box");
    if (!box) {
      return;
    }
    if (err instanceof ApiError) {
      box.textContent = `${err.reason}: ${err.message}`;
    } else {
      box.textContent = String(err);
    }
  }

  // ---- rendering ----------------------------------------------------------

  private render(): void {
    this.root.innerHTML = "";
    this.root.appendChild(this.renderTabBar());
    const error = document.createElement("div");
    error.className = "error-box";
    this.root.appendChild(error);
    const panel = document.createElement("section");
    panel.className = "tab-panel";
    this.root.appendChild(panel);
    switch (this.state.activeTab) {
      case "data":
        this.renderDataTab(panel);
        break;
      case "episodes":
        this.renderEpisodesTab(panel);
        break;
      case "index":
        this.renderIndexTab(panel);
        break;
      case "calibration":
        this.renderCalibrationTab(panel);
        break;
      case "application":
        this.renderApplicationTab(panel);
        break;
    }
  }

  private renderTabBar(): HTMLElement {
    const bar = document.createElement("nav");
    bar.className = "tabs";
    const enabled = new Set(enabledTabs(this.state));
    for (const tab of TAB_ORDER) {
      const button = document.createElement("button");
      button.textContent = TAB_LABELS[tab];
      button.disabled = !enabled.has(tab);
      if (tab === this.state.activeTab) {
        button.classList.add("active");
      }
      button.addEventListener("click", () => {
        this.setState(activateTab(this.state, tab));
      });
      bar.appendChild(button);
    }
    return bar;
  }

  private renderDataTab(panel: HTMLElement): void {
    const form = document.createElement("form");
    form.innerHTML = `
      <label>Name <input name="name" value="signal"></label>
      <label>Resolution
        <select name="resolution">
          <option value="monthly">monthly</option>
          <option value="daily">daily</option>
        </select>
      </label>
      <label>CSV file <input name="file" type="file" accept=".csv"></label>
      <button type="submit">Upload</button>`;
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const name = (form.elements.namedItem("name") as HTMLInputElement).value;
      const resolution = (
        form.elements.namedItem("resolution") as HTMLSelectElement
      ).value;
      const file = (form.elements.namedItem("file") as HTMLInputElement)
        .files?.[0];
      if (!file || !this.state.sessionId) {
        return;
      }
      try {
        const csv = await file.text();
        await this.api.uploadSignal(this.state.sessionId, name, csv, resolution);
        this.setState(addSignal(this.state, name));
      } catch (err) {
        this.showError(err);
      }
    });
    panel.appendChild(form);

    const list = document.createElement("ul");
    for (const name of this.state.signals) {
      const item = document.createElement("li");
      item.textContent = name;
      list.appendChild(item);
    }
    panel.appendChild(list);

    const responseForm = document.createElement("form");
    responseForm.innerHTML = `
      <label>Response CSV <input name="file" type="file" accept=".csv"></label>
      <button type="submit">Attach response</button>`;
    responseForm.addEventListener("submit", async (event) => {
      event.preventDefault();
      const file = (responseForm.elements.namedItem("file") as HTMLInputElement)
        .files?.[0];
      if (!file) {
        return;
      }
      this.data.responseCsv = await file.text();
      this.setState(setResponseLoaded(this.state));
    });
    panel.appendChild(responseForm);
  }

  private renderEpisodesTab(panel: HTMLElement): void {
    const form = document.createElement("form");
    form.innerHTML = `
      <label>Name <input name="name" value="episodes"></label>
      <label>Signal <input name="signal" value="${this.state.signals[0] ?? ""}"></label>
      <label>Threshold <input name="threshold" type="number" step="any" value="8"></label>
      <label>Direction
        <select name="direction"><option>up</option><option>down</option></select>
      </label>
      <label>Min duration <input name="min_duration" type="number" value="1" min="1"></label>
      <label>Season (MM-DD:MM-DD) <input name="season" placeholder="optional"></label>
      <button type="submit">Extract</button>`;
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      if (!this.state.sessionId) {
        return;
      }
      const read = (key: string) =>
        (form.elements.namedItem(key) as HTMLInputElement).value;
      try {
        const table = await this.api.defineEpisodes(this.state.sessionId, {
          name: read("name"),
          method: "threshold",
          signal: read("signal"),
          threshold: Number(read("threshold")),
          direction: read("direction") as "up" | "down",
          min_duration: Number(read("min_duration")),
          season: read("season") || undefined,
        });
        this.data.episodeTables.set(table.name, table);
        this.setState(addEpisodeSet(this.state, table.name));
      } catch (err) {
        this.showError(err);
      }
    });
    panel.appendChild(form);

    for (const name of this.state.episodeSets) {
      const table = this.data.episodeTables.get(name);
      if (table) {
        panel.appendChild(this.renderLollipop(table));
        panel.appendChild(this.renderEpisodeRows(table));
      }
    }
  }

  private renderLollipop(table: EpisodeTable): SVGSVGElement {
    const width = 640;
    const height = 180;
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    for (const mark of lollipopMarks(table.lollipop, width, height)) {
      const stem = document.createElementNS(svg.namespaceURI, "line");
      stem.setAttribute("x1", String(mark.x));
      stem.setAttribute("x2", String(mark.x));
      stem.setAttribute("y1", String(mark.stemY0));
      stem.setAttribute("y2", String(mark.stemY1));
      stem.setAttribute("stroke", mark.color);
      svg.appendChild(stem);
      const head = document.createElementNS(svg.namespaceURI, "circle");
      head.setAttribute("cx", String(mark.x));
      head.setAttribute("cy", String(mark.headY));
      head.setAttribute("r", String(2 + Math.sqrt(mark.duration)));
      head.setAttribute("fill", mark.color);
      svg.appendChild(head);
    }
    return svg;
  }

  private renderEpisodeRows(table: EpisodeTable): HTMLElement {
    const grid = document.createElement("table");
    grid.innerHTML =
      "<tr><th>id</th><th>start</th><th>end</th><th>n</th><th>tau</th></tr>";
    for (const row of table.episodes) {
      const tr = document.createElement("tr");
      tr.innerHTML = `<td>${row.id}</td><td>${row.start}</td><td>${row.end}</td>` +
        `<td>${row.n}</td><td>${row.tau}</td>`;
      grid.appendChild(tr);
    }
    return grid;
  }

  private renderIndexTab(panel: HTMLElement): void {
    const form = document.createElement("form");
    form.innerHTML = `
      <label>Name <input name="name" value="index"></label>
      <label>Episodes <input name="episodes" value="${this.state.episodeSets[0] ?? ""}"></label>
      <label>m <input name="m" type="number" value="30"></label>
      <label>a <input name="a" type="number" step="any" value="0"></label>
      <label>b <input name="b" type="number" step="any" value="0"></label>
      <label>c <input name="c" type="number" step="any" value="0.5"></label>
      <label>d <input name="d" type="number" step="any" value="1"></label>
      <label>Timing season <input name="timing_season" placeholder="optional"></label>
      <label>Anchors <input name="anchors" placeholder="yearly:1990:2019"></label>
      <button type="submit">Evaluate</button>`;
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      if (!this.state.sessionId) {
        return;
      }
      const read = (key: string) =>
        (form.elements.namedItem(key) as HTMLInputElement).value;
      try {
        const series = await this.api.buildIndex(this.state.sessionId, {
          name: read("name"),
          episodes: read("episodes"),
          params: {
            m: Number(read("m")),
            a: Number(read("a")),
            b: Number(read("b")),
            c: Number(read("c")),
            d: Number(read("d")),
          },
          timing_season: read("timing_season") || undefined,
          anchors: read("anchors"),
        });
        this.data.indexSeries.set(series.name, series);
        this.setState(addIndex(this.state, series.name));
      } catch (err) {
        this.showError(err);
      }
    });
    panel.appendChild(form);

    for (const name of this.state.indexes) {
      const series = this.data.indexSeries.get(name);
      if (series) {
        panel.appendChild(this.renderIndexPreview(series));
      }
    }
  }

  private renderIndexPreview(series: IndexSeriesPayload): SVGSVGElement {
    const width = 640;
    const height = 160;
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    const x = linearScale([0, Math.max(series.values.length - 1, 1)], [0, width]);
    const y = linearScale(extent(series.values), [height - 4, 4]);
    const path = document.createElementNS(svg.namespaceURI, "path");
    path.setAttribute(
      "d",
      polylinePath(
        series.values.map((_, i) => x(i)),
        series.values.map((v) => y(v)),
      ),
    );
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", "#333");
    svg.appendChild(path);
    return svg;
  }

  private renderCalibrationTab(panel: HTMLElement): void {
    for (const stage of [1, 2, 3] as StageNumber[]) {
      panel.appendChild(this.renderStageBlock(stage));
    }
  }

  private renderStageBlock(stage: StageNumber): HTMLElement {
    const block = document.createElement("fieldset");
    block.disabled = !stageUnlocked(this.state, stage);
    const legend = document.createElement("legend");
    legend.textContent = `Stage ${stage}`;
    block.appendChild(legend);

    const records = this.data.stageMaps[stage];
    if (records) {
      block.appendChild(this.renderMap(stage, records));
    }

    const run = document.createElement("button");
    run.textContent = "Run grid";
    run.addEventListener("click", () => void this.runStage(stage));
    block.appendChild(run);

    const rationale = document.createElement("textarea");
    rationale.placeholder = "Selection rationale (required)";
    rationale.className = `rationale-${stage}`;
    block.appendChild(rationale);

    const season = document.createElement("input");
    season.placeholder = "Special season MM-DD:MM-DD (stage 3)";
    season.className = `season-${stage}`;
    if (stage === 3) {
      block.appendChild(season);
    }

    const submit = document.createElement("button");
    submit.textContent = "Post selection";
    submit.addEventListener("click", () => {
      const draft = {
        rationale: rationale.value,
        season: stage === 3 ? season.value : undefined,
      };
      const problems = draftProblems(this.state, stage, draft);
      if (problems.length > 0) {
        this.showError(new Error(problems.join(", ")));
        return;
      }
      void this.postSelection(stage, draft.rationale);
    });
    block.appendChild(submit);
    return block;
  }

  private renderMap(stage: StageNumber, records: MapRecord[]): SVGSVGElement {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    const width = 640;
    const best = topCell(records);
    if (stage === 1) {
      const curves = stageOneCurves(records);
      const height = 120 * Math.max(curves.length, 1);
      svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
      curves.forEach((curve, row) => {
        curve.points.forEach((point, i) => {
          const dot = document.createElementNS(svg.namespaceURI, "circle");
          dot.setAttribute("cx", String((i + 0.5) * (width / curve.points.length)));
          dot.setAttribute(
            "cy",
            String(row * 120 + 60 - (point.r ?? 0) * 50),
          );
          dot.setAttribute("r", "4");
          dot.setAttribute("fill", point.color);
          svg.appendChild(dot);
        });
      });
      return svg;
    }
    const panels = mapPanels(records);
    const height = 90 * Math.max(panels.length, 1);
    svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    panels.forEach((panelData, row) => {
      panelData.cells.forEach((cell, i) => {
        const rect = document.createElementNS(svg.namespaceURI, "rect");
        rect.setAttribute("x", String(i * (width / panelData.cells.length)));
        rect.setAttribute("y", String(row * 90));
        rect.setAttribute("width", String(width / panelData.cells.length));
        rect.setAttribute("height", "80");
        rect.setAttribute("fill", cell.fill);
        if (
          best &&
          best.m === panelData.m &&
          best.b === panelData.b &&
          best.c === cell.c &&
          best.d === cell.d
        ) {
          rect.setAttribute("stroke", "#000");
        }
        svg.appendChild(rect);
      });
    });
    return svg;
  }

  private async runStage(stage: StageNumber): Promise<void> {
    if (!this.state.sessionId || !this.data.responseCsv) {
      return;
    }
    const episodes = this.state.episodeSets[0];
    try {
      const stageOne = this.state.selections[1];
      const stageTwo = this.state.selections[2];
      const jobId = await this.api.startCalibration(this.state.sessionId, {
        stage,
        episodes,
        m_list:
          stage === 1 || !stageTwo
            ? [12, 24, 30, 36]
            : [stageTwo.configuration.m],
        a: stageOne?.configuration.a ?? 0,
        anchors: `yearly:1992:2019`,
        response: this.data.responseCsv,
        season:
          stage === 3
            ? (this.root.querySelector(".season-3") as HTMLInputElement)?.value
            : undefined,
      });
      this.data.stageJobs[stage] = jobId;
      const poll: CalibrationPoll = await this.api.waitForCalibration(
        this.state.sessionId,
        jobId,
      );
      if (poll.status === "error") {
        this.showError(new Error(poll.error ?? "calibration failed"));
        return;
      }
      this.data.stageMaps[stage] = poll.records ?? [];
      this.render();
    } catch (err) {
      this.showError(err);
    }
  }

  private async postSelection(stage: StageNumber, rationale: string): Promise<void> {
    const jobId = this.data.stageJobs[stage];
    if (!this.state.sessionId || !jobId) {
      return;
    }
    if (!canSubmitSelection(this.state, stage, { rationale, season: "x" })) {
      return;
    }
    try {
      const selection = await this.api.recordSelection(
        this.state.sessionId,
        jobId,
        { rule: "max_abs_r", rationale },
      );
      this.setState(applySelection(this.state, stage, selection));
    } catch (err) {
      this.showError(err);
    }
  }

  private renderApplicationTab(panel: HTMLElement): void {
    const button = document.createElement("button");
    button.textContent = "Associate index with response";
    button.addEventListener("click", async () => {
      if (!this.state.sessionId || !this.data.responseCsv) {
        return;
      }
      try {
        const payload = await this.api.associate(
          this.state.sessionId,
          this.state.indexes[0],
          this.data.responseCsv,
        );
        const summary = document.createElement("pre");
        summary.textContent = JSON.stringify(payload.association, null, 2);
        panel.appendChild(summary);
        panel.appendChild(this.renderScatter(payload));
      } catch (err) {
        this.showError(err);
      }
    });
    panel.appendChild(button);
  }

  private renderScatter(payload: {
    association: { slope: number; intercept: number; p: number };
    scatter: { x: number; y: number }[];
  }): SVGSVGElement {
    const width = 420;
    const height = 320;
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    const xs = payload.scatter.map((pt) => pt.x);
    const ys = payload.scatter.map((pt) => pt.y);
    const x = linearScale(extent(xs), [10, width - 10]);
    const y = linearScale(extent(ys), [height - 10, 10]);
    for (const pt of payload.scatter) {
      const dot = document.createElementNS(svg.namespaceURI, "circle");
      dot.setAttribute("cx", String(x(pt.x)));
      dot.setAttribute("cy", String(y(pt.y)));
      dot.setAttribute("r", "3");
      dot.setAttribute("fill", "#555");
      svg.appendChild(dot);
    }
    const line = regressionLine(
      payload.scatter,
      payload.association.slope,
      payload.association.intercept,
      payload.association.p,
    );
    const mark = document.createElementNS(svg.namespaceURI, "line");
    mark.setAttribute("x1", String(x(line.x1)));
    mark.setAttribute("y1", String(y(line.y1)));
    mark.setAttribute("x2", String(x(line.x2)));
    mark.setAttribute("y2", String(y(line.y2)));
    mark.setAttribute("stroke", line.color);
    mark.setAttribute("stroke-width", "2");
    svg.appendChild(mark);
    return svg;
  }
}

export function mount(baseUrl: string, rootId = "root"): App {
  const root = document.getElementById(rootId);
  if (!root) {
    throw new Error(`missing #${rootId} element`);
  }
  const app = new App(new ApiClient(baseUrl), root);
  void app.start();
  return app;
}
