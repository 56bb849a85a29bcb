/**
 * Browser entry point: builds the API client and viewmodel, repaints the
 * page on every state change, and drives the poll loop. The server base
 * URL and this console's registered hardware address come from meta tags
 * so the bundle itself stays deployment-agnostic.
 *
 * Event handlers are delegated from the root node because renders replace
 * the markup wholesale; form fields and focus are captured before each
 * repaint and restored after so polling never eats a half-typed value.
 */

import { ConsoleApi } from "./api.js";
import { renderApp } from "./ui.js";
import { ConsoleViewModel } from "./viewmodel.js";

const FORM_FIELD_IDS = ["login-username", "login-password", "form-volume", "form-rate"];

function metaContent(name: string, fallback: string): string {
  const tag = document.querySelector(`meta[name="${name}"]`);
  const content = tag?.getAttribute("content");
  return content !== null && content !== undefined && content !== "" ? content : fallback;
}

function inputValue(id: string): string {
  const el = document.getElementById(id);
  return el instanceof HTMLInputElement ? el.value : "";
}

function boot(): void {
  const root = document.getElementById("app");
  if (root === null) {
    throw new Error("missing #app mount point");
  }
  const base = metaContent("server-base-url", window.location.origin);
  const consoleMac = metaContent("console-mac", "CC:00:00:00:00:01");
  const vm = new ConsoleViewModel(new ConsoleApi(base));

  const paint = (): void => {
    const saved = new Map<string, string>();
    for (const id of FORM_FIELD_IDS) {
      const el = document.getElementById(id);
      if (el instanceof HTMLInputElement) {
        saved.set(id, el.value);
      }
    }
    const focusedId = document.activeElement instanceof HTMLInputElement
      ? document.activeElement.id
      : null;

    root.innerHTML = renderApp(vm, Date.now());

    for (const [id, value] of saved) {
      const el = document.getElementById(id);
      if (el instanceof HTMLInputElement) {
        el.value = value;
      }
    }
    if (focusedId !== null) {
      const el = document.getElementById(focusedId);
      if (el instanceof HTMLInputElement) {
        el.focus();
      }
    }
  };
  vm.subscribe(paint);
  paint();

  root.addEventListener("submit", (ev) => {
    const form = ev.target;
    if (!(form instanceof HTMLFormElement)) {
      return;
    }
    ev.preventDefault();
    if (form.id === "login-form") {
      void vm.login(inputValue("login-username"), inputValue("login-password"), consoleMac);
    } else if (form.id === "index-form") {
      void vm.pushIndex(
        Number.parseFloat(inputValue("form-volume")),
        Number.parseFloat(inputValue("form-rate")),
      );
    }
  });

  root.addEventListener("click", (ev) => {
    const target = ev.target;
    if (!(target instanceof Element)) {
      return;
    }
    const row = target.closest(".patient-row");
    if (row instanceof HTMLElement && row.dataset["patientId"] !== undefined) {
      void vm.select(row.dataset["patientId"]);
      return;
    }
    const button = target.closest("button");
    if (button === null) {
      return;
    }
    if (button.id === "logout") {
      vm.logout();
    } else if (button.id === "approve-proposal") {
      void vm.resolve(true);
    } else if (button.id === "reject-proposal") {
      void vm.resolve(false);
    }
  });

  const loop = (): void => {
    void vm.refresh().finally(() => {
      window.setTimeout(loop, vm.pollDelayMs);
    });
  };
  window.setTimeout(loop, vm.pollDelayMs);
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", boot);
} else {
  boot();
}
