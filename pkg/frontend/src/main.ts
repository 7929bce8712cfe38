import { ApiClient } from "./api.js";
import { ConsultationController } from "./controller.js";
import { ChatView } from "./view.js";

// Service base URL: same origin by default, overridable for split deployments
// via <meta name="dopi-base-url" content="http://host:port">.
const meta = document.querySelector('meta[name="dopi-base-url"]');
const baseUrl = meta?.getAttribute("content") ?? "";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}

const controller = new ConsultationController(new ApiClient(baseUrl));
new ChatView(root, controller);
