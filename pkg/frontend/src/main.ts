/**
 * Browser entry point: fetch the bundle named by ?bundle= (defaulting to
 * the checked-in fixture), build the scene, and register the per-frame
 * update with the global animation loop. A download button exports the
 * accumulated position log in the trace snapshot schema for parity
 * checking against the producing engine.
 */

import { Renderer } from "./render.js";
import { HarnessScene } from "./scene.js";
import { fetchBundle } from "./types.js";

const DEFAULT_BUNDLE = "test/fixtures/scene.bundle.json";

function hud(scene: HarnessScene): HTMLElement {
  const bar = document.createElement("div");
  bar.style.cssText = "position:fixed;top:8px;left:8px;font:14px monospace;"
    + "background:rgba(255,255,255,.85);padding:6px 10px;border-radius:6px";
  const counter = document.createElement("span");
  const button = document.createElement("button");
  button.textContent = "download position log";
  button.style.marginLeft = "1em";
  button.onclick = () => {
    const blob = new Blob([scene.engine.logJsonl()],
                          { type: "application/jsonl" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "harness-positions.jsonl";
    a.click();
  };
  bar.append(counter, button);
  setInterval(() => {
    counter.textContent = `frame ${scene.frame}`;
  }, 250);
  return bar;
}

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const url = params.get("bundle") ?? DEFAULT_BUNDLE;
  try {
    const bundle = await fetchBundle(url);
    const scene = new HarnessScene(bundle);
    const renderer = new Renderer(scene, document.body);
    document.body.appendChild(hud(scene));
    const animate = () => {
      scene.animateFrame(); // exactly one fixed-dt tick per callback
      renderer.render();
      requestAnimationFrame(animate);
    };
    requestAnimationFrame(animate);
  } catch (e) {
    const pre = document.createElement("pre");
    pre.textContent = String(e);
    document.body.appendChild(pre);
    throw e;
  }
}

void start();
