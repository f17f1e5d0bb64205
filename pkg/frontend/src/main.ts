/** Browser entry point: boot the viewer against the serving origin. */

import { createApp } from "./app.js";

const container = document.getElementById("app");
if (container === null) {
  throw new Error("missing #app container");
}

createApp({ container, baseUrl: window.location.origin }).catch((err) => {
  container.textContent = `viewer failed to start: ${String(err)}`;
});
