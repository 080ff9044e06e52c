/**
 * Browser entry point: wires the session, camera, sampled teleop, and
 * render loop to the DOM. Keyboard: WASD / arrows drive, space = e-stop.
 * Click sets a goal; drag pans; wheel zooms; checkboxes toggle overlays.
 */

import { Camera } from "./camera.js";
import { Session } from "./client.js";
import { KeyAxes, TeleopLoop } from "./input.js";
import { DEFAULT_OVERLAYS, render, ViewState } from "./render.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const toastEl = document.getElementById("toast")!;

const view: ViewState = {
  camera: new Camera(),
  overlays: { ...DEFAULT_OVERLAYS },
  connection: "connecting",
  banner: null,
  width: canvas.width,
  height: canvas.height,
};

let fitted = false;

function resize(): void {
  canvas.width = window.innerWidth;
  canvas.height = window.innerHeight - 40;
  view.width = canvas.width;
  view.height = canvas.height;
  if (session.map !== null) {
    view.camera.fitMap(session.map, view.width, view.height);
  }
}

function toast(msg: string): void {
  toastEl.textContent = msg;
  toastEl.classList.add("show");
  setTimeout(() => toastEl.classList.remove("show"), 2500);
}

const defaultUrl = `ws://${location.hostname || "127.0.0.1"}:8077`;
const url = new URLSearchParams(location.search).get("ws") ?? defaultUrl;

const session = new Session(url, {
  onMap(meta) {
    if (!fitted) {
      view.camera.fitMap(meta, view.width, view.height);
      fitted = true;
    }
    view.banner = null;
  },
  onError(detail) {
    view.banner = detail;
    toast(detail);
  },
  onStatus(status) {
    view.connection = status;
  },
});

const keys = new KeyAxes();
const teleop = new TeleopLoop(
  () => keys.sample(),
  (speed, steering) => session.sendDrive(speed, steering));

window.addEventListener("keydown", (ev) => {
  if (ev.code === "Space") {
    session.sendEstop();
    keys.clear();
    ev.preventDefault();
    return;
  }
  keys.keyDown(ev.code);
});
window.addEventListener("keyup", (ev) => keys.keyUp(ev.code));
window.addEventListener("blur", () => keys.clear());

let dragging = false;
let moved = false;
let lastX = 0;
let lastY = 0;

canvas.addEventListener("mousedown", (ev) => {
  dragging = true;
  moved = false;
  lastX = ev.offsetX;
  lastY = ev.offsetY;
});
canvas.addEventListener("mousemove", (ev) => {
  if (!dragging) return;
  const dx = ev.offsetX - lastX;
  const dy = ev.offsetY - lastY;
  if (Math.abs(dx) + Math.abs(dy) > 2) moved = true;
  view.camera.panBy(dx, dy);
  lastX = ev.offsetX;
  lastY = ev.offsetY;
});
canvas.addEventListener("mouseup", (ev) => {
  dragging = false;
  if (moved) return; // it was a pan, not a goal click
  const world = view.camera.screenToWorld({ x: ev.offsetX, y: ev.offsetY });
  if (session.map !== null && view.camera.inMap(session.map, world)) {
    session.sendGoal(world.x, world.y);
  } else {
    toast("click inside the map to set a goal");
  }
});
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
  view.camera.zoomAt({ x: ev.offsetX, y: ev.offsetY }, factor);
});

for (const name of Object.keys(view.overlays) as
     (keyof typeof view.overlays)[]) {
  const box = document.getElementById(`toggle-${name}`) as
    HTMLInputElement | null;
  if (box !== null) {
    box.checked = view.overlays[name];
    box.addEventListener("change", () => {
      view.overlays[name] = box.checked;
    });
  }
}

function frame(): void {
  render(ctx, session.map, session.cells, session.latest, view);
  requestAnimationFrame(frame);
}

window.addEventListener("resize", resize);
resize();
session.start();
teleop.start();
requestAnimationFrame(frame);
