/** Console bootstrap: wire the editor, panels and service client together. */
import { ApiClient, ApiError } from "./api.js";
import { ConsoleStore } from "./state.js";
import {
  curvePoints,
  neighborRows,
  probabilityView,
  shapleyPanel,
  trajectoryPoints,
} from "./views.js";
import {
  renderCurve,
  renderEditorStatus,
  renderModelInfo,
  renderNeighbors,
  renderProbability,
  renderShapley,
  renderTrajectory,
} from "./render.js";
import type { CaseMap } from "./types.js";

const api = new ApiClient();
const store = new ConsoleStore();

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

async function refreshPrediction(): Promise<void> {
  const requestId = store.beginRequest();
  renderEditorStatus(byId("editor-status"), "querying...");
  try {
    const response = await api.predict(store.effectiveCase());
    if (store.acknowledgePrediction(requestId, response)) {
      renderProbability(byId("probability"), probabilityView(response));
      renderNeighbors(byId("neighbors"), neighborRows(response));
      renderEditorStatus(byId("editor-status"), "");
    }
  } catch (err) {
    if (err instanceof DOMException && err.name === "AbortError") return;
    const msg = err instanceof ApiError ? err.message : String(err);
    renderEditorStatus(byId("editor-status"), msg, true);
  }
}

function buildEditor(): void {
  const health = store.health;
  if (!health) return;
  const form = byId("case-editor");
  form.replaceChildren();
  health.features.forEach((feature, j) => {
    const row = document.createElement("label");
    row.className = "editor-row";
    const name = document.createElement("span");
    name.textContent = health.units?.[j]
      ? `${feature} (${health.units[j]})`
      : feature;
    const input = document.createElement("input");
    input.type = "text";
    input.dataset.feature = feature;
    input.placeholder = "missing";
    const base = store.baseCase[feature];
    if (base !== null && base !== undefined) input.value = String(base);
    input.addEventListener("change", () => {
      const text = input.value.trim();
      try {
        if (text === "" || text === String(store.baseCase[feature] ?? "")) {
          store.revertEdit(feature);
          input.classList.remove("edited", "invalid");
        } else {
          const parsed = Number(text);
          if (!Number.isFinite(parsed)) throw new Error(`"${text}" is not a number`);
          store.stageEdit(feature, parsed);
          input.classList.add("edited");
          input.classList.remove("invalid");
        }
        void refreshPrediction();
      } catch (err) {
        input.classList.add("invalid");
        renderEditorStatus(byId("editor-status"), String(err), true);
      }
    });
    row.append(name, input);
    form.append(row);
  });
}

async function loadExplanation(): Promise<void> {
  try {
    const response = await api.explain(store.effectiveCase(), "mc", 2000, 0);
    store.setExplanation(response);
    renderShapley(byId("shapley"), shapleyPanel(response));
  } catch (err) {
    renderEditorStatus(byId("editor-status"), String(err), true);
  }
}

async function loadTrajectory(): Promise<void> {
  const targetRaw = (byId("whatif-target") as HTMLTextAreaElement).value;
  let target: CaseMap;
  try {
    target = targetRaw.trim() ? (JSON.parse(targetRaw) as CaseMap) : {};
  } catch {
    renderEditorStatus(byId("editor-status"), "target case is not valid JSON", true);
    return;
  }
  try {
    const response = await api.whatif(store.baseCase, target);
    store.setTrajectory(response);
    renderTrajectory(byId("trajectory"), trajectoryPoints(response));
  } catch (err) {
    renderEditorStatus(byId("editor-status"), String(err), true);
  }
}

async function loadCurve(): Promise<void> {
  const select = byId("curve-feature") as HTMLSelectElement;
  if (!select.value) return;
  try {
    renderCurve(byId("curve"), curvePoints(await api.curve(select.value)));
  } catch (err) {
    renderEditorStatus(byId("editor-status"), String(err), true);
  }
}

async function main(): Promise<void> {
  const health = await api.health();
  store.loadModel(health);
  renderModelInfo(byId("model-info"), health);

  const select = byId("curve-feature") as HTMLSelectElement;
  for (const feature of health.features) {
    const option = document.createElement("option");
    option.value = feature;
    option.textContent = feature;
    select.append(option);
  }
  select.addEventListener("change", () => void loadCurve());

  store.setBaseCase({});
  buildEditor();
  byId("btn-revert").addEventListener("click", () => {
    store.revertAll();
    buildEditor();
    void refreshPrediction();
  });
  byId("btn-explain").addEventListener("click", () => void loadExplanation());
  byId("btn-whatif").addEventListener("click", () => void loadTrajectory());

  const requestId = store.beginRequest();
  const base = await api.predict(store.baseCase);
  if (store.acknowledgeBasePrediction(requestId, base)) {
    renderProbability(byId("probability"), probabilityView(base));
    renderNeighbors(byId("neighbors"), neighborRows(base));
  }
}

main().catch((err) => {
  renderEditorStatus(byId("editor-status"), `failed to load model: ${err}`, true);
});
