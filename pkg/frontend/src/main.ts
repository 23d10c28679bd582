// DOM wiring: inspection picker, triage queue list, crop viewer with
// polygon overlay, verdict controls, progress dashboard. Everything
// shown is fetched from the review service; a refresh rebuilds the
// exact same state.

import { ApiError, ReviewClient } from './client.js';
import {
  fitView,
  imageDrawRect,
  pan,
  polygonPath,
  zoomAbout,
  type ViewTransform,
} from './overlay.js';
import { TriageQueue } from './queue.js';
import type { CropResult, InspectionSummary, ProposalRow } from './types.js';

const CROP_MARGIN = 48;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const inspectionSelect = el<HTMLSelectElement>('inspection-select');
const summarySpan = el<HTMLSpanElement>('summary');
const queueNav = el<HTMLElement>('queue');
const canvas = el<HTMLCanvasElement>('canvas');
const errorBox = el<HTMLDivElement>('error-box');
const errorText = el<HTMLSpanElement>('error-text');
const retryBtn = el<HTMLButtonElement>('retry-btn');
const acceptBtn = el<HTMLButtonElement>('accept-btn');
const rejectBtn = el<HTMLButtonElement>('reject-btn');
const severityBar = el<HTMLDivElement>('severity-bar');
const metaTable = el<HTMLTableElement>('proposal-meta');
const dashboardTable = el<HTMLTableElement>('dashboard');

const apiBase =
  new URLSearchParams(location.search).get('api') ?? location.origin;
const client = new ReviewClient(apiBase);
const queue = new TriageQueue(client);

let crop: CropResult | null = null;
let bitmap: ImageBitmap | null = null;
let view: ViewTransform = { zoom: 1, panX: 0, panY: 0 };
let selectedSeverity: number | null = null;
let shownProposal: string | null = null;

function statusColor(status: ProposalRow['status']): string {
  if (status === 'accepted') return '#2e9e44';
  if (status === 'rejected') return '#999999';
  return '#ffb020';
}

function render(): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!bitmap || !crop) return;

  ctx.imageSmoothingEnabled = view.zoom < 1;
  const rect = imageDrawRect(bitmap.width, bitmap.height, view);
  ctx.drawImage(bitmap, rect.x, rect.y, rect.w, rect.h);

  const item = queue.current();
  const pts = polygonPath(crop.polygon, view);
  if (pts.length) {
    ctx.beginPath();
    pts.forEach((p, i) => (i ? ctx.lineTo(p.x, p.y) : ctx.moveTo(p.x, p.y)));
    ctx.closePath();
    const status = item ? item.status : 'pending';
    ctx.strokeStyle = statusColor(status);
    ctx.lineWidth = 2;
    ctx.setLineDash(status === 'rejected' ? [6, 4] : []);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

function renderQueue(): void {
  queueNav.textContent = '';
  queue.items.forEach((p, idx) => {
    const btn = document.createElement('button');
    btn.className = `status-${p.status}${idx === queue.cursor ? ' active' : ''}`;
    const sev = p.assigned_severity ? ` S${p.assigned_severity}` : '';
    btn.textContent = `${p.proposal_id}  ${(p.confidence * 100).toFixed(0)}%${sev}`;
    btn.addEventListener('click', () => {
      queue.cursor = idx;
      void showCurrent();
    });
    queueNav.appendChild(btn);
  });
  summarySpan.textContent = queue.items.length
    ? `${queue.pendingCount()} pending of ${queue.items.length}`
    : 'no proposals';
}

function renderMeta(): void {
  metaTable.textContent = '';
  const item = queue.current();
  if (!item) return;
  const rows: Array<[string, string]> = [
    ['proposal', item.proposal_id],
    ['image', item.image_id],
    ['confidence', item.confidence.toFixed(3)],
    ['tile', `${item.tile.origin_x},${item.tile.origin_y} @${item.tile.size}`],
    ['status', item.status + (item.assigned_severity ? ` S${item.assigned_severity}` : '')],
  ];
  for (const [k, v] of rows) {
    const tr = document.createElement('tr');
    const td1 = document.createElement('td');
    const td2 = document.createElement('td');
    td1.textContent = k;
    td2.textContent = v;
    tr.append(td1, td2);
    metaTable.appendChild(tr);
  }
}

function renderSeverityBar(): void {
  severityBar.textContent = '';
  for (let s = 1; s <= 5; s += 1) {
    const btn = document.createElement('button');
    btn.textContent = String(s);
    btn.className = `sev${selectedSeverity === s ? ' selected' : ''}`;
    btn.addEventListener('click', () => {
      selectedSeverity = s;
      renderSeverityBar();
    });
    severityBar.appendChild(btn);
  }
}

async function renderDashboard(): Promise<void> {
  dashboardTable.textContent = '';
  const id = inspectionSelect.value;
  if (!id) return;
  try {
    const report = await client.fetchReport(id);
    const rows: Array<[string, string]> = [
      ['pending', String(report.counts.pending)],
      ['accepted', String(report.counts.accepted)],
      ['rejected', String(report.counts.rejected)],
    ];
    for (const [sev, n] of Object.entries(report.per_severity).sort()) {
      rows.push([`severity ${sev}`, String(n)]);
    }
    for (const [k, v] of rows) {
      const tr = document.createElement('tr');
      const td1 = document.createElement('td');
      const td2 = document.createElement('td');
      td1.textContent = k;
      td2.textContent = v;
      td2.className = 'count';
      tr.append(td1, td2);
      dashboardTable.appendChild(tr);
    }
  } catch {
    // dashboard is best-effort; the queue remains usable without it
  }
}

function showError(message: string): void {
  errorText.textContent = message;
  errorBox.style.display = 'block';
}

function clearError(): void {
  errorBox.style.display = 'none';
}

async function showCurrent(): Promise<void> {
  const item = queue.current();
  renderQueue();
  renderMeta();
  if (!item) {
    crop = null;
    bitmap = null;
    render();
    return;
  }
  if (item.proposal_id === shownProposal && crop) {
    render();
    return;
  }
  clearError();
  try {
    crop = await client.fetchCrop(item.proposal_id, CROP_MARGIN);
    bitmap = await createImageBitmap(crop.blob);
    shownProposal = item.proposal_id;
    view = fitView(bitmap.width, bitmap.height, canvas.clientWidth, canvas.clientHeight);
    render();
  } catch (err) {
    crop = null;
    bitmap = null;
    shownProposal = null;
    render();
    showError(err instanceof ApiError ? `crop unavailable: ${err.message}` : String(err));
  }
}

async function submit(verdict: 'accepted' | 'rejected'): Promise<void> {
  if (verdict === 'accepted' && selectedSeverity === null) {
    showError('pick a severity (1-5) before accepting');
    return;
  }
  const outcome = await queue.submit(
    verdict,
    verdict === 'accepted' ? (selectedSeverity as number) : undefined,
  );
  if (!outcome.ok) {
    showError(outcome.error ?? 'submission failed');
    renderQueue();
    renderMeta();
    return;
  }
  clearError();
  await showCurrent();
  void renderDashboard();
}

async function loadInspection(id: string): Promise<void> {
  await queue.load(id);
  shownProposal = null;
  await showCurrent();
  void renderDashboard();
}

async function boot(): Promise<void> {
  let inspections: InspectionSummary[] = [];
  try {
    inspections = await client.listInspections();
  } catch (err) {
    showError(`cannot reach review service at ${apiBase}: ${String(err)}`);
    return;
  }
  inspectionSelect.textContent = '';
  for (const ins of inspections) {
    const opt = document.createElement('option');
    opt.value = ins.inspection_id;
    opt.textContent = `${ins.inspection_id} (${ins.pending}/${ins.proposals} pending)`;
    inspectionSelect.appendChild(opt);
  }
  inspectionSelect.addEventListener('change', () => {
    void loadInspection(inspectionSelect.value);
  });
  const first = inspections[0];
  if (first) await loadInspection(first.inspection_id);
}

acceptBtn.addEventListener('click', () => void submit('accepted'));
rejectBtn.addEventListener('click', () => void submit('rejected'));
retryBtn.addEventListener('click', () => void showCurrent());

document.addEventListener('keydown', (ev) => {
  if (ev.target instanceof HTMLInputElement || ev.target instanceof HTMLSelectElement) return;
  if (ev.key === 'a') void submit('accepted');
  else if (ev.key === 'r') void submit('rejected');
  else if (ev.key >= '1' && ev.key <= '5') {
    selectedSeverity = Number(ev.key);
    renderSeverityBar();
  } else if (ev.key === 'j' || ev.key === 'ArrowRight') {
    queue.next();
    void showCurrent();
  } else if (ev.key === 'k' || ev.key === 'ArrowLeft') {
    queue.prev();
    void showCurrent();
  } else if (ev.key === '+' || ev.key === '=') {
    view = zoomAbout(view, { x: canvas.clientWidth / 2, y: canvas.clientHeight / 2 }, view.zoom * 2);
    render();
  } else if (ev.key === '-') {
    view = zoomAbout(view, { x: canvas.clientWidth / 2, y: canvas.clientHeight / 2 }, view.zoom / 2);
    render();
  } else {
    return;
  }
  ev.preventDefault();
});

canvas.addEventListener('wheel', (ev) => {
  ev.preventDefault();
  const rect = canvas.getBoundingClientRect();
  const focus = { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  const factor = ev.deltaY < 0 ? 1.25 : 0.8;
  view = zoomAbout(view, focus, view.zoom * factor);
  render();
});

let dragging = false;
let dragLast = { x: 0, y: 0 };
canvas.addEventListener('mousedown', (ev) => {
  dragging = true;
  dragLast = { x: ev.clientX, y: ev.clientY };
  canvas.classList.add('panning');
});
document.addEventListener('mousemove', (ev) => {
  if (!dragging) return;
  view = pan(view, ev.clientX - dragLast.x, ev.clientY - dragLast.y);
  dragLast = { x: ev.clientX, y: ev.clientY };
  render();
});
document.addEventListener('mouseup', () => {
  dragging = false;
  canvas.classList.remove('panning');
});
window.addEventListener('resize', render);

renderSeverityBar();
void boot();
