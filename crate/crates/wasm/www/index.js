import init, { WasmDemo } from "./pkg/usermap_wasm.js";

const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const canvas = document.getElementById("map");
const ctx = canvas.getContext("2d");
const status = document.getElementById("status");
const profileBox = document.getElementById("profile");
const topBox = document.getElementById("top");

let demo = null;
let points = [];
let labels = new Map();
let ranking = null;
let selected = null;

function el(tag, text, cls) {
  const node = document.createElement(tag);
  if (text !== undefined) node.textContent = text;
  if (cls) node.className = cls;
  return node;
}

function screen(p) {
  const pad = 20;
  return [pad + p.x * (canvas.width - 2 * pad), pad + (1 - p.y) * (canvas.height - 2 * pad)];
}

function draw() {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const top = new Set(ranking ? ranking.top : []);
  points.forEach((p, i) => {
    const [x, y] = screen(p);
    const score = ranking ? ranking.scores[i] : 0.5;
    ctx.globalAlpha = ranking ? 0.25 + 0.75 * score : 0.8;
    ctx.fillStyle = COLORS[p.community % COLORS.length];
    ctx.beginPath();
    ctx.arc(x, y, 3 + Math.sqrt(p.posts) / 2, 0, 2 * Math.PI);
    ctx.fill();
    ctx.globalAlpha = 1;
    const label = labels.get(p.id);
    if (label !== undefined || top.has(p.id) || p.id === selected) {
      ctx.lineWidth = 2;
      ctx.strokeStyle = label === true ? "#0a0" : label === false ? "#c00" : "#000";
      ctx.beginPath();
      ctx.arc(x, y, 8, 0, 2 * Math.PI);
      ctx.stroke();
    }
  });
}

function showProfile(id) {
  selected = id;
  profileBox.replaceChildren(el("h1", id));
  const list = el("ul");
  for (const item of JSON.parse(demo.profile(id, 12))) {
    const li = el("li", item.id + " ");
    li.append(el("span", item.channel ? `${item.kind} / ${item.channel}` : item.kind, "kind"));
    list.append(li);
  }
  const yes = el("button", "relevant");
  const no = el("button", "not relevant");
  yes.onclick = () => judge(id, true);
  no.onclick = () => judge(id, false);
  profileBox.append(list, yes, no);
  draw();
}

function judge(id, relevant) {
  demo.judge(id, relevant);
  labels.set(id, relevant);
  status.textContent = `${labels.size} labelled`;
  draw();
}

function rank() {
  try {
    ranking = JSON.parse(demo.rank());
  } catch (e) {
    status.textContent = e.message;
    return;
  }
  status.textContent = `round ${ranking.round}: ${ranking.top.length} suggestions`;
  topBox.replaceChildren(el("h1", "suggested"));
  const list = el("ul");
  for (const id of ranking.top) {
    const li = el("li");
    const link = el("a", id);
    link.href = "#";
    link.onclick = (ev) => {
      ev.preventDefault();
      showProfile(id);
    };
    li.append(link);
    list.append(li);
  }
  topBox.append(list);
  draw();
}

function generate() {
  const k = Number(document.getElementById("k").value);
  const mixing = Number(document.getElementById("mixing").value);
  const started = performance.now();
  demo = new WasmDemo(k, 40, mixing, 7);
  points = JSON.parse(demo.points());
  labels = new Map();
  ranking = null;
  selected = null;
  profileBox.replaceChildren();
  topBox.replaceChildren();
  status.textContent = `${points.length} users built in ${Math.round(performance.now() - started)} ms`;
  draw();
}

canvas.addEventListener("click", (ev) => {
  const rect = canvas.getBoundingClientRect();
  const [cx, cy] = [ev.clientX - rect.left, ev.clientY - rect.top];
  let best = null;
  let bestDist = 100;
  for (const p of points) {
    const [x, y] = screen(p);
    const d = (x - cx) ** 2 + (y - cy) ** 2;
    if (d < bestDist) {
      best = p;
      bestDist = d;
    }
  }
  if (best) showProfile(best.id);
});

document.getElementById("generate").onclick = generate;
document.getElementById("rank").onclick = rank;
document.getElementById("reset").onclick = () => {
  demo.reset();
  labels = new Map();
  ranking = null;
  status.textContent = "labels cleared";
  draw();
};
window.addEventListener("resize", draw);

await init();
generate();
