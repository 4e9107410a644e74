// Scene document -> preview model. The model is pure data derived from the
// API response: marker positions come from node transforms, colors from
// node attributes, the background from the sky ramp. Nothing here invents
// scene content; a document that fails validation never replaces the
// previous frame.

import { fogMix, NO_SKY_ELEVATION, skyTint } from "./sky.js";
import type {
  Color,
  SceneDocument,
  SceneNodePlain,
  TypedValuePlain,
} from "./types.js";

export class SceneDocumentError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "SceneDocumentError";
  }
}

export type MarkerShape = "cone" | "sphere" | "plane";

export interface Marker {
  shape: MarkerShape;
  id: string;
  x: number;
  y: number;
  z: number;
  scale: number;
  color: Color;
}

export interface TerrainInfo {
  size: number;
  grid: number;
  color: Color;
}

export interface WaterInfo {
  side: number;
  level: number;
}

export interface PreviewModel {
  nodeCount: number;
  skyColor: Color;
  terrain: TerrainInfo | null;
  water: WaterInfo | null;
  markers: Marker[];
  zRange: [number, number];
}

const DEFAULT_GROUND: Color = [0.25, 0.4, 0.2];
const TREE_FALLBACK: Color = [0.2, 0.45, 0.2];
const FLOWER_FALLBACK: Color = [0.9, 0.85, 0.4];

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isVec3(value: unknown): value is number[] {
  return (
    Array.isArray(value) &&
    value.length === 3 &&
    value.every((v) => typeof v === "number" && Number.isFinite(v))
  );
}

function checkNode(value: unknown, index: number): SceneNodePlain {
  if (!isRecord(value)) {
    throw new SceneDocumentError(`node ${index} is not an object`);
  }
  if (typeof value.id !== "string" || typeof value.kind !== "string") {
    throw new SceneDocumentError(`node ${index} is missing id or kind`);
  }
  const transform = value.transform;
  if (!isRecord(transform) || !isVec3(transform.position)) {
    throw new SceneDocumentError(`node ${value.id} has no usable transform`);
  }
  if (typeof transform.scale !== "number" || typeof transform.yaw !== "number") {
    throw new SceneDocumentError(`node ${value.id} has no usable transform`);
  }
  const geometry = value.geometry ?? null;
  if (geometry !== null && (!isRecord(geometry) || typeof geometry.shape !== "string")) {
    throw new SceneDocumentError(`node ${value.id} has malformed geometry`);
  }
  if (!isRecord(value.attributes ?? {})) {
    throw new SceneDocumentError(`node ${value.id} has malformed attributes`);
  }
  return value as unknown as SceneNodePlain;
}

export function parseSceneDocument(payload: unknown): SceneDocument {
  if (!isRecord(payload)) {
    throw new SceneDocumentError("scene document is not an object");
  }
  const count = payload.node_count;
  if (typeof count !== "number" || !Number.isInteger(count) || count < 0) {
    throw new SceneDocumentError("scene document has no integer node_count");
  }
  if (!Array.isArray(payload.nodes)) {
    throw new SceneDocumentError("scene document has no node list");
  }
  if (payload.nodes.length !== count) {
    throw new SceneDocumentError(
      `node_count ${count} disagrees with ${payload.nodes.length} nodes`,
    );
  }
  payload.nodes.forEach(checkNode);
  return payload as unknown as SceneDocument;
}

function attribute(node: SceneNodePlain, name: string): TypedValuePlain | null {
  return node.attributes[name] ?? null;
}

function attrNumber(node: SceneNodePlain, name: string, fallback: number): number {
  const attr = attribute(node, name);
  return attr && typeof attr.value === "number" ? attr.value : fallback;
}

function attrColor(node: SceneNodePlain, name: string, fallback: Color): Color {
  const attr = attribute(node, name);
  if (attr && isVec3(attr.value)) {
    return [attr.value[0], attr.value[1], attr.value[2]];
  }
  return fallback;
}

function geometryNumber(node: SceneNodePlain, name: string, fallback: number): number {
  const value = node.geometry?.params[name];
  return typeof value === "number" ? value : fallback;
}

function firstOfKind(doc: SceneDocument, kind: string): SceneNodePlain | null {
  return doc.nodes.find((node) => node.kind === kind) ?? null;
}

export function buildPreviewModel(doc: SceneDocument): PreviewModel {
  const skyNode = firstOfKind(doc, "sky");
  const fogNode = firstOfKind(doc, "fog");
  const snowNode = firstOfKind(doc, "snow");
  const terrainNode = firstOfKind(doc, "terrain");
  const waterNode = firstOfKind(doc, "water");

  const elevation = skyNode
    ? attrNumber(skyNode, "sun_elevation", NO_SKY_ELEVATION)
    : NO_SKY_ELEVATION;
  let skyColor = skyTint(elevation);
  if (fogNode) {
    skyColor = fogMix(skyColor, attrNumber(fogNode, "density", 0));
  }

  let terrain: TerrainInfo | null = null;
  if (terrainNode) {
    // Snow whitening is engine-side: the snow node already carries the
    // whitened ground color, so the preview just prefers it.
    const ground = attrColor(terrainNode, "base_color", DEFAULT_GROUND);
    const color = snowNode ? attrColor(snowNode, "snow_color", ground) : ground;
    terrain = {
      size: geometryNumber(terrainNode, "size", 0),
      grid: geometryNumber(terrainNode, "grid", 1),
      color,
    };
  }

  const water: WaterInfo | null = waterNode
    ? {
        side: geometryNumber(waterNode, "side", 0),
        level: waterNode.transform.position[2],
      }
    : null;

  const markers: Marker[] = [];
  let zLo = 0;
  let zHi = 0;
  for (const node of doc.nodes) {
    const [x, y, z] = node.transform.position;
    zLo = Math.min(zLo, z);
    zHi = Math.max(zHi, z);
    if (node.kind === "tree") {
      markers.push({
        shape: "cone",
        id: node.id,
        x,
        y,
        z,
        scale: node.transform.scale * geometryNumber(node, "trunk_height", 1),
        color: attrColor(node, "leaf_color", TREE_FALLBACK),
      });
    } else if (node.kind === "flower") {
      markers.push({
        shape: "sphere",
        id: node.id,
        x,
        y,
        z,
        scale: node.transform.scale,
        color: attrColor(node, "petal_color", FLOWER_FALLBACK),
      });
    } else if (node.kind === "water") {
      markers.push({
        shape: "plane",
        id: node.id,
        x,
        y,
        z,
        scale: geometryNumber(node, "side", 0),
        color: [0.25, 0.45, 0.7],
      });
    }
  }

  return {
    nodeCount: doc.node_count,
    skyColor,
    terrain,
    water,
    markers,
    zRange: [zLo, zHi],
  };
}
