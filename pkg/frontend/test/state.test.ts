import { describe, expect, it } from "vitest";

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
  WorkflowState,
} from "../src/state.js";
import { SelectionRecord } from "../src/types.js";

function selection(stage: number): SelectionRecord {
  return {
    configuration: { m: 30, a: 0, b: 3, c: 0.4, d: 1 },
    rule: "max_abs_r",
    rationale: `stage ${stage} choice`,
    stable: true,
    r: 0.9,
    p: 0.001,
    selected_at: "2024-01-01T00:00:00Z",
  };
}

function readyForCalibration(): WorkflowState {
  let state = setSession(initialState(), "abc");
  state = addSignal(state, "soi");
  state = addEpisodeSet(state, "highs");
  state = setResponseLoaded(state);
  return state;
}

describe("tab gating", () => {
  it("only the data tab is enabled in a fresh session", () => {
    const state = setSession(initialState(), "abc");
    expect(enabledTabs(state)).toEqual(["data"]);
  });

  it("nothing is enabled before a session exists", () => {
    expect(enabledTabs(initialState())).toEqual([]);
  });

  it("episodes unlock after a signal upload", () => {
    const state = addSignal(setSession(initialState(), "abc"), "soi");
    expect(enabledTabs(state)).toEqual(["data", "episodes"]);
  });

  it("index unlocks after an episode set, application after an index", () => {
    let state = addSignal(setSession(initialState(), "abc"), "soi");
    state = addEpisodeSet(state, "highs");
    expect(enabledTabs(state)).toContain("index");
    expect(enabledTabs(state)).not.toContain("application");
    state = addIndex(state, "impit");
    expect(enabledTabs(state)).toContain("application");
  });

  it("calibration needs both episodes and a response", () => {
    let state = addSignal(setSession(initialState(), "abc"), "soi");
    state = addEpisodeSet(state, "highs");
    expect(enabledTabs(state)).not.toContain("calibration");
    state = setResponseLoaded(state);
    expect(enabledTabs(state)).toContain("calibration");
  });

  it("activateTab refuses disabled targets", () => {
    const state = setSession(initialState(), "abc");
    expect(activateTab(state, "calibration").activeTab).toBe("data");
    const withSignal = addSignal(state, "soi");
    expect(activateTab(withSignal, "episodes").activeTab).toBe("episodes");
  });
});

describe("stage gating", () => {
  it("stage 1 is open once calibration is available", () => {
    const state = readyForCalibration();
    expect(stageUnlocked(state, 1)).toBe(true);
    expect(stageUnlocked(state, 2)).toBe(false);
    expect(stageUnlocked(state, 3)).toBe(false);
  });

  it("stage 2 unlocks only after a stage-1 selection is posted", () => {
    let state = readyForCalibration();
    state = applySelection(state, 1, selection(1));
    expect(stageUnlocked(state, 2)).toBe(true);
    expect(stageUnlocked(state, 3)).toBe(false);
    state = applySelection(state, 2, selection(2));
    expect(stageUnlocked(state, 3)).toBe(true);
  });

  it("re-posting stage 1 invalidates stages 2 and 3", () => {
    let state = readyForCalibration();
    state = applySelection(state, 1, selection(1));
    state = applySelection(state, 2, selection(2));
    state = applySelection(state, 3, selection(3));
    state = applySelection(state, 1, selection(1));
    expect(state.selections[2]).toBeUndefined();
    expect(state.selections[3]).toBeUndefined();
    expect(stageUnlocked(state, 3)).toBe(false);
  });

  it("stages stay locked without a response", () => {
    let state = setSession(initialState(), "abc");
    state = addSignal(state, "soi");
    state = addEpisodeSet(state, "highs");
    expect(stageUnlocked(state, 1)).toBe(false);
  });
});

describe("selection drafts", () => {
  it("rationale is mandatory", () => {
    const state = readyForCalibration();
    expect(canSubmitSelection(state, 1, { rationale: "" })).toBe(false);
    expect(canSubmitSelection(state, 1, { rationale: "   " })).toBe(false);
    expect(canSubmitSelection(state, 1, { rationale: "clear local max" })).toBe(
      true,
    );
  });

  it("stage 3 requires a season", () => {
    let state = readyForCalibration();
    state = applySelection(state, 1, selection(1));
    state = applySelection(state, 2, selection(2));
    const problems = draftProblems(state, 3, { rationale: "ok" });
    expect(problems).toContain("season_required");
    expect(
      canSubmitSelection(state, 3, { rationale: "ok", season: "04-01:05-31" }),
    ).toBe(true);
  });

  it("locked stages report stage_locked", () => {
    const state = readyForCalibration();
    expect(draftProblems(state, 2, { rationale: "ok" })).toContain(
      "stage_locked",
    );
  });
});

describe("artifact registration", () => {
  it("duplicate names are not re-added", () => {
    let state = setSession(initialState(), "abc");
    state = addSignal(state, "soi");
    state = addSignal(state, "soi");
    expect(state.signals).toEqual(["soi"]);
  });

  it("a new session resets every artifact", () => {
    let state = readyForCalibration();
    state = applySelection(state, 1, selection(1));
    state = setSession(state, "next");
    expect(state.sessionId).toBe("next");
    expect(state.signals).toEqual([]);
    expect(state.selections[1]).toBeUndefined();
  });
});
