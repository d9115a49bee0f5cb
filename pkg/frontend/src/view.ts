// Chair console rendering. The DOM is rebuilt from the view model on every
// applied event; buttons disable on click and come back with the next
// render, so nothing in the view ever runs ahead of the server.

import { ApiFailure, GatewayApi, commandId } from "./api.js";
import { colorFor, floorList, type FloorView, type ViewModel } from "./state.js";
import type { QueueEntry } from "./types.js";

const ORIGIN_BADGES: Record<string, string> = {
  rfid: "badge",
  bfcp: "remote",
  web: "web",
};

export class ConsoleView {
  private errors = new Map<number, string>();
  private globalError = "";

  constructor(
    private root: HTMLElement,
    private api: GatewayApi,
  ) {}

  render(model: ViewModel, status: string): void {
    this.root.replaceChildren();
    const header = el("div", "console-header");
    header.append(
      el("h1", "", "Floor moderation"),
      el("span", `conn conn-${status}`, status),
    );
    this.root.append(header);
    if (this.globalError) {
      this.root.append(el("div", "error-banner", this.globalError));
    }
    if (!model.synced) {
      this.root.append(el("p", "placeholder", "waiting for the event stream…"));
      return;
    }
    for (const floor of floorList(model)) {
      this.root.append(this.renderFloor(floor));
    }
  }

  private renderFloor(floor: FloorView): HTMLElement {
    const section = el("section", "floor");
    const head = el("div", "floor-head");
    head.append(el("h2", "", `${floor.floorName} (#${floor.floorId})`));
    head.append(this.renderPolicyControls(floor));
    section.append(head);
    if (floor.requests.length === 0) {
      section.append(el("p", "placeholder", "queue empty"));
      return section;
    }
    const list = el("div", "cards");
    for (const entry of floor.requests) {
      list.append(this.renderCard(entry));
    }
    section.append(list);
    return section;
  }

  private renderPolicyControls(floor: FloorView): HTMLElement {
    const controls = el("div", "policy-controls");
    const cap = document.createElement("input");
    cap.type = "number";
    cap.min = "1";
    cap.value = String(floor.policy?.max_granted ?? 1);
    cap.title = "max granted";
    const auto = document.createElement("input");
    auto.type = "checkbox";
    auto.checked = floor.policy?.auto_grant ?? false;
    const autoLabel = el("label", "", "auto-grant ");
    autoLabel.append(auto);
    const apply = button("Apply policy", async () => {
      await this.command({
        action: "set_policy",
        floor_id: floor.floorId,
        policy: {
          max_granted: Number(cap.value),
          auto_grant: auto.checked,
        },
        command_id: commandId(),
      });
    });
    const revokeAll = button("Revoke all", async () => {
      await this.command({
        action: "revoke_all",
        floor_id: floor.floorId,
        command_id: commandId(),
      });
    });
    revokeAll.classList.add("danger");
    controls.append(el("span", "cap-label", "cap"), cap, autoLabel, apply, revokeAll);
    return controls;
  }

  private renderCard(entry: QueueEntry): HTMLElement {
    const card = el("div", `card card-${colorFor(entry.state)}`);
    const title = el("div", "card-title");
    title.append(
      el("strong", "", entry.display_name),
      el("span", "origin", ORIGIN_BADGES[entry.origin] ?? entry.origin),
    );
    if (entry.priority === "business_class") {
      title.append(el("span", "priority", "business class"));
    }
    card.append(title);
    const stateLine = el("div", "card-state");
    stateLine.append(el("span", `state state-${entry.state}`, entry.state));
    if (entry.position > 0) {
      stateLine.append(el("span", "position", `#${entry.position}`));
    }
    card.append(stateLine);
    const actions = el("div", "card-actions");
    for (const [label, command] of this.actionsFor(entry)) {
      actions.append(
        button(label, async (btn) => {
          for (const sibling of actions.querySelectorAll("button")) {
            sibling.disabled = true;
          }
          btn.disabled = true;
          await this.command({ ...command, command_id: commandId() }, entry.request_id);
        }),
      );
    }
    card.append(actions);
    const error = this.errors.get(entry.request_id);
    if (error) card.append(el("div", "card-error", error));
    return card;
  }

  private actionsFor(entry: QueueEntry): [string, Record<string, unknown>][] {
    const id = entry.request_id;
    switch (entry.state) {
      case "pending":
        return [
          ["Accept", { action: "accept", request_id: id }],
          ["Deny", { action: "deny", request_id: id }],
          ["Prioritize", { action: "set_priority", request_id: id, priority: "business_class" }],
        ];
      case "accepted":
        return [
          ["Deny", { action: "deny", request_id: id }],
          entry.priority === "business_class"
            ? ["Normal", { action: "set_priority", request_id: id, priority: "normal" }]
            : ["Prioritize", { action: "set_priority", request_id: id, priority: "business_class" }],
        ];
      case "granted":
        return [["Revoke", { action: "revoke", request_id: id }]];
      default:
        return [];
    }
  }

  private async command(body: Record<string, unknown>, requestId?: number): Promise<void> {
    try {
      await this.api.chairCommand(body as never);
      if (requestId !== undefined) this.errors.delete(requestId);
      this.globalError = "";
    } catch (failure) {
      const message =
        failure instanceof ApiFailure
          ? `${failure.status} ${failure.code}`
          : String(failure);
      if (requestId !== undefined) this.errors.set(requestId, message);
      else this.globalError = message;
    }
  }
}

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function button(
  label: string,
  onClick: (self: HTMLButtonElement) => Promise<void>,
): HTMLButtonElement {
  const node = document.createElement("button");
  node.textContent = label;
  node.addEventListener("click", () => {
    void onClick(node);
  });
  return node;
}
