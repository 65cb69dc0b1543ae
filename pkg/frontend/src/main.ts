import { ReviewApi } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}
const app = new App(root, new ReviewApi(""));
app.start();
