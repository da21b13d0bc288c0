import { ApiClient } from "./api.js";
import { AnnotationApp } from "./app.js";

function annotatorId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("annotator");
  if (fromQuery) {
    sessionStorage.setItem("annotator", fromQuery);
    return fromQuery;
  }
  const stored = sessionStorage.getItem("annotator");
  if (stored) return stored;
  const entered = window.prompt("Annotator id:") ?? "";
  sessionStorage.setItem("annotator", entered);
  return entered;
}

const root = document.getElementById("app");
if (root) {
  const app = new AnnotationApp(root, new ApiClient(""), annotatorId());
  void app.start();
}
