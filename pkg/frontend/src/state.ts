/**
 * Workflow state machine: tab order mirrors the pipeline, later tabs unlock
 * only once their inputs exist, and calibration stages unlock strictly in
 * order as selections are posted. Selections require a non-empty rationale.
 */

import { SelectionRecord } from "./types.js";

export type TabKey = "data" | "episodes" | "index" | "calibration" | "application";

export const TAB_ORDER: TabKey[] = [
  "data",
  "episodes",
  "index",
  "calibration",
  "application",
];

export type StageNumber = 1 | 2 | 3;

export type WorkflowState = {
  sessionId: string | null;
  activeTab: TabKey;
  signals: string[];
  episodeSets: string[];
  indexes: string[];
  responseLoaded: boolean;
  selections: Partial<Record<StageNumber, SelectionRecord>>;
};

export function initialState(): WorkflowState {
  return {
    sessionId: null,
    activeTab: "data",
    signals: [],
    episodeSets: [],
    indexes: [],
    responseLoaded: false,
    selections: {},
  };
}

/** A tab is usable once the artifacts it operates on exist. */
export function tabEnabled(state: WorkflowState, tab: TabKey): boolean {
  switch (tab) {
    case "data":
      return state.sessionId !== null;
    case "episodes":
      return state.signals.length > 0;
    case "index":
      return state.episodeSets.length > 0;
    case "calibration":
      return state.episodeSets.length > 0 && state.responseLoaded;
    case "application":
      return state.indexes.length > 0;
  }
}

export function enabledTabs(state: WorkflowState): TabKey[] {
  return TAB_ORDER.filter((tab) => tabEnabled(state, tab));
}

export function activateTab(state: WorkflowState, tab: TabKey): WorkflowState {
  if (!tabEnabled(state, tab)) {
    return state;
  }
  return { ...state, activeTab: tab };
}

/** Stage k+1 stays locked until the stage-k selection has been posted. */
export function stageUnlocked(state: WorkflowState, stage: StageNumber): boolean {
  if (!tabEnabled(state, "calibration")) {
    return false;
  }
  if (stage === 1) {
    return true;
  }
  return state.selections[(stage - 1) as StageNumber] !== undefined;
}

export type SelectionDraft = {
  rationale: string;
  season?: string;
};

export type DraftProblem =
  | "stage_locked"
  | "rationale_required"
  | "season_required";

/** Rationale is mandatory; stage 3 additionally needs a season. */
export function draftProblems(
  state: WorkflowState,
  stage: StageNumber,
  draft: SelectionDraft,
): DraftProblem[] {
  const problems: DraftProblem[] = [];
  if (!stageUnlocked(state, stage)) {
    problems.push("stage_locked");
  }
  if (draft.rationale.trim().length === 0) {
    problems.push("rationale_required");
  }
  if (stage === 3 && !(draft.season && draft.season.trim().length > 0)) {
    problems.push("season_required");
  }
  return problems;
}

export function canSubmitSelection(
  state: WorkflowState,
  stage: StageNumber,
  draft: SelectionDraft,
): boolean {
  return draftProblems(state, stage, draft).length === 0;
}

/**
 * Records a posted selection. Re-posting an earlier stage invalidates every
 * later stage: their maps were computed against the old choice.
 */
export function applySelection(
  state: WorkflowState,
  stage: StageNumber,
  selection: SelectionRecord,
): WorkflowState {
  const selections: WorkflowState["selections"] = {};
  for (const s of [1, 2, 3] as StageNumber[]) {
    if (s < stage && state.selections[s]) {
      selections[s] = state.selections[s];
    }
  }
  selections[stage] = selection;
  return { ...state, selections };
}

export function addSignal(state: WorkflowState, name: string): WorkflowState {
  if (state.signals.includes(name)) {
    return state;
  }
  return { ...state, signals: [...state.signals, name] };
}

export function addEpisodeSet(state: WorkflowState, name: string): WorkflowState {
  if (state.episodeSets.includes(name)) {
    return state;
  }
  return { ...state, episodeSets: [...state.episodeSets, name] };
}

export function addIndex(state: WorkflowState, name: string): WorkflowState {
  if (state.indexes.includes(name)) {
    return state;
  }
  return { ...state, indexes: [...state.indexes, name] };
}

export function setResponseLoaded(state: WorkflowState): WorkflowState {
  return { ...state, responseLoaded: true };
}

export function setSession(_state: WorkflowState, id: string): WorkflowState {
  // A new session invalidates every artifact from the previous one.
  return { ...initialState(), sessionId: id };
}
