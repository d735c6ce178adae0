import init, { Classifier, rasterize } from "./pkg/huruf_web.js";

const $ = (id) => document.getElementById(id);
const pad = $("pad");
const ctx = pad.getContext("2d");
let model = null;
let drawing = false;

function clearPad() {
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, pad.width, pad.height);
  $("bars").replaceChildren();
  $("maps").replaceChildren();
  const p = $("preview");
  p.getContext("2d").clearRect(0, 0, p.width, p.height);
}

function status(text) {
  $("status").textContent = text;
}

function useModel(m, note) {
  model = m;
  const names = m.classNames;
  $("classes").textContent = `classes: ${names.join(", ")}`;
  $("preview").width = $("preview").height = m.side;
  $("block").replaceChildren(
    ...Array.from({ length: m.blockCount }, (_, i) => new Option(`block ${i + 1}`, i)),
  );
  status(`${m.kind} model, ${names.length} classes, ${m.side}×${m.side} input. ${note}`);
  clearPad();
}

function pixels() {
  const img = ctx.getImageData(0, 0, pad.width, pad.height);
  return rasterize(img.data, pad.width, pad.height, model.side);
}

function showPreview(px) {
  const side = model.side;
  const c = $("preview").getContext("2d");
  const img = c.createImageData(side, side);
  px.forEach((v, i) => {
    const g = Math.round(v * 255);
    img.data.set([g, g, g, 255], i * 4);
  });
  c.putImageData(img, 0, 0);
}

function showBars(pred) {
  $("bars").replaceChildren(
    ...pred.topk.map(({ name, probability }) => {
      const row = document.createElement("div");
      row.className = "bar";
      const label = document.createElement("span");
      label.textContent = name;
      const fill = document.createElement("span");
      fill.className = "fill";
      fill.style.width = `${Math.max(1, probability * 200)}px`;
      const pct = document.createElement("span");
      pct.textContent = `${(probability * 100).toFixed(1)}%`;
      row.append(label, fill, pct);
      return row;
    }),
  );
}

function showMaps(px) {
  const maps = model.featureMaps(px, Number($("block").value || 0));
  const { side, channels } = maps;
  const data = maps.data;
  const tiles = [];
  for (let c = 0; c < channels; c++) {
    const cv = document.createElement("canvas");
    cv.width = cv.height = side;
    const g = cv.getContext("2d");
    const img = g.createImageData(side, side);
    for (let k = 0; k < side * side; k++) {
      const v = data[c * side * side + k];
      img.data.set([v, v, v, 255], k * 4);
    }
    g.putImageData(img, 0, 0);
    cv.title = `channel ${c + 1}`;
    tiles.push(cv);
  }
  maps.free();
  $("maps").replaceChildren(...tiles);
}

function classify() {
  if (!model) return;
  const px = pixels();
  if (!px.some((v) => v > 0)) return;
  showPreview(px);
  showBars(JSON.parse(model.predict(px, 3)));
  showMaps(px);
}

function point(e) {
  const r = pad.getBoundingClientRect();
  return [(e.clientX - r.left) * (pad.width / r.width), (e.clientY - r.top) * (pad.height / r.height)];
}

pad.addEventListener("pointerdown", (e) => {
  drawing = true;
  pad.setPointerCapture(e.pointerId);
  ctx.beginPath();
  ctx.moveTo(...point(e));
});
pad.addEventListener("pointermove", (e) => {
  if (!drawing) return;
  ctx.lineTo(...point(e));
  ctx.strokeStyle = "#fff";
  ctx.lineWidth = 18;
  ctx.lineCap = ctx.lineJoin = "round";
  ctx.stroke();
});
pad.addEventListener("pointerup", () => {
  drawing = false;
  classify();
});

$("clear").addEventListener("click", clearPad);
$("block").addEventListener("change", classify);

$("train").addEventListener("click", () => {
  const epochs = Math.max(1, Number($("epochs").value) || 6);
  status(`Training for ${epochs} epochs…`);
  // let the status paint before the page blocks
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const m = Classifier.trainToy(epochs, 7);
      const acc = m.trainAccuracy;
      const secs = ((performance.now() - t0) / 1000).toFixed(1);
      useModel(m, `Trained in ${secs}s, last epoch train accuracy ${(acc[acc.length - 1] * 100).toFixed(1)}%. Draw a horizontal bar, a vertical bar or a round blob.`);
    } catch (err) {
      status(`Training failed: ${err.message ?? err}`);
    }
  }, 20);
});

$("files").addEventListener("change", async (e) => {
  const files = [...e.target.files];
  const manifest = files.find((f) => f.name.endsWith(".json"));
  const weights = files.find((f) => f.name.endsWith(".bin"));
  if (!manifest || !weights) {
    status("Select both manifest.json and weights.bin.");
    return;
  }
  try {
    const m = Classifier.fromFiles(await manifest.text(), new Uint8Array(await weights.arrayBuffer()));
    useModel(m, "Loaded from disk.");
  } catch (err) {
    status(`Could not load model: ${err.message ?? err}`);
  }
});

await init();
clearPad();
status("Ready. Train the toy model or load a saved one.");
