// Pure scene construction: a channel snapshot in, a drawable scene graph
// out. No client-side physics; every number traces to a wire channel.
// Keeping this pure lets the replay-equality test hash live and replayed
// scenes without a DOM.

import { FrameBuffer } from "./framebuffer.js";

export interface ScenePoint {
  kind: "point";
  name: string;
  xyz: [number, number, number];
  stale: boolean;
}

export interface SceneSegment {
  kind: "segment";
  name: string;
  a: [number, number, number];
  b: [number, number, number];
  stale: boolean;
}

export interface SceneArrow {
  kind: "arrow";
  name: string;
  origin: [number, number, number];
  vec: [number, number, number];
}

export interface Scene {
  t: number;
  items: (ScenePoint | SceneSegment | SceneArrow)[];
  unknownChannels: string[];
  grfTotal: number;
}

// Skeleton edges by link name; segments are drawn between link origins.
export const SKELETON: [string, string][] = [
  ["torso", "l_hip_yaw_link"],
  ["l_hip_yaw_link", "l_hip_roll_link"],
  ["l_hip_roll_link", "l_thigh"],
  ["l_thigh", "l_shank"],
  ["l_shank", "l_foot"],
  ["torso", "r_hip_yaw_link"],
  ["r_hip_yaw_link", "r_hip_roll_link"],
  ["r_hip_roll_link", "r_thigh"],
  ["r_thigh", "r_shank"],
  ["r_shank", "r_foot"],
];

const GRF_SCALE = 1.0 / 400.0; // newtons to meters for arrow display

function vec3(v: number[] | null): [number, number, number] | null {
  if (!v || v.length < 3) {
    return null;
  }
  return [v[0], v[1], v[2]];
}

export function buildScene(fb: FrameBuffer, feet: string[] = ["left", "right"]): Scene {
  const items: Scene["items"] = [];
  const unknown: string[] = [];

  const linkPos = (name: string): [number, number, number] | null => {
    const pose = fb.vector(`viz.link.${name}`);
    if (!pose || pose.length < 7) {
      return null;
    }
    return [pose[0], pose[1], pose[2]];
  };

  for (const [a, b] of SKELETON) {
    const pa = linkPos(a);
    const pb = linkPos(b);
    if (pa && pb) {
      items.push({
        kind: "segment", name: `bone.${a}-${b}`, a: pa, b: pb,
        stale: fb.isStale(`viz.link.${a}`) || fb.isStale(`viz.link.${b}`),
      });
    }
  }

  const com = vec3(fb.vector("viz.com") ?? fb.vector("com.pos"));
  if (com) {
    items.push({ kind: "point", name: "com", xyz: com,
                 stale: fb.isStale("viz.com") && fb.isStale("com.pos") });
  }
  const dcm = vec3(fb.vector("dcm.ref"));
  if (dcm) {
    items.push({ kind: "point", name: "dcm", xyz: [dcm[0], dcm[1], 0],
                 stale: fb.isStale("dcm.ref") });
  }

  let grfTotal = 0;
  for (const foot of feet) {
    const fz = fb.latest.get(`sim.fz.${foot}`);
    const footPos = linkPos(`${foot === "left" ? "l" : "r"}_foot`);
    if (fz && typeof fz.payload === "number" && footPos) {
      grfTotal += fz.payload;
      items.push({
        kind: "arrow", name: `grf.${foot}`,
        origin: [footPos[0], footPos[1], 0],
        vec: [0, 0, (fz.payload as number) * GRF_SCALE],
      });
    }
  }

  // Desired reaction forces, summed per foot from the stacked points.
  const fdes = fb.vector("viz.fdes");
  if (fdes && fdes.length % 3 === 0 && fdes.length > 0) {
    const half = fdes.length / 2;
    feet.forEach((foot, i) => {
      let v: [number, number, number] = [0, 0, 0];
      for (let k = i * half; k < (i + 1) * half; k += 3) {
        v = [v[0] + fdes[k], v[1] + fdes[k + 1], v[2] + fdes[k + 2]];
      }
      const footPos = linkPos(`${foot === "left" ? "l" : "r"}_foot`);
      if (footPos) {
        items.push({
          kind: "arrow", name: `fdes.${foot}`,
          origin: [footPos[0], footPos[1], 0],
          vec: [v[0] * GRF_SCALE, v[1] * GRF_SCALE, v[2] * GRF_SCALE],
        });
      }
    });
  }

  for (const name of fb.latest.keys()) {
    if (name.startsWith("viz.link.")) {
      const pose = fb.vector(name);
      if (!pose || pose.length !== 7) {
        unknown.push(name);
      }
    }
  }

  return { t: fb.clock, items, unknownChannels: unknown.sort(), grfTotal };
}
