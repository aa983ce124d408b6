import { ApiClient } from "./api";
import { App } from "./app";

const root = document.getElementById("app");
if (root) {
  const app = new App(root, new ApiClient(""));
  void app.load();
  // handy for poking at the live app from the console
  (window as unknown as { mpdbgApp: App }).mpdbgApp = app;
}
