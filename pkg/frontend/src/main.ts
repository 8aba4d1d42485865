/** Browser entry point: mount the wizard on #app. */

import { ApiClient } from "./api.js";
import { SessionWizard } from "./wizard.js";

function apiBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("api") ?? "";
}

const root = document.getElementById("app");
if (root) {
  const wizard = new SessionWizard(root, new ApiClient(apiBase()), window.sessionStorage);
  void wizard.boot();
}
