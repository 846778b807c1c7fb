/** Policy editor round-trip and inline validation (acceptance criterion 11). */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/api.js";
import { canonicalJson, EditorModel } from "../src/editor.js";
import { renderFindings } from "../src/render.js";
import { startGateway, type RunningGateway } from "./gateway.js";

let gateway: RunningGateway;
let client: GatewayClient;

beforeAll(async () => {
  gateway = await startGateway();
  client = new GatewayClient(gateway.url);
}, 30000);

afterAll(() => gateway.stop());

function opposedVectorEdit(text: string): string {
  // flip the output policy's vector to the exact opposite of pii-input's
  const doc = JSON.parse(text);
  const assistant = doc.assistants[0];
  assistant.outputPolicies[0].ethicalVector = { privacy: -1.0, transparency: 0.0 };
  return canonicalJson(doc);
}

describe("policy editor", () => {
  it("round-trips the config losslessly (modulo key order)", async () => {
    const editor = new EditorModel(client);
    await editor.load();
    const original = await client.getConfig();

    const saved = await editor.save(); // unchanged buffer
    expect(saved).toBe(true);

    const roundTripped = await client.getConfig();
    expect(canonicalJson(roundTripped)).toBe(canonicalJson(original));
  }, 15000);

  it("surfaces a Case1 blocker inline and clears it when fixed", async () => {
    const editor = new EditorModel(client);
    await editor.load();
    const pristine = editor.text;

    editor.edit(opposedVectorEdit(editor.text));
    const valid = await editor.validate();
    expect(valid).toBe(false);
    expect(editor.blockers.length).toBeGreaterThan(0);
    expect(editor.blockers.some((f) => f.message.includes("case1"))).toBe(true);

    const html = renderFindings(editor.findings);
    expect(html).toContain("finding-error");
    expect(html).toContain("case1");

    // a blocked save must not replace the deployment
    const saved = await editor.save();
    expect(saved).toBe(false);
    expect(canonicalJson(await client.getConfig())).toBe(
      canonicalJson(JSON.parse(pristine)),
    );

    // fixing the vector clears the blocker
    editor.edit(pristine);
    expect(await editor.validate()).toBe(true);
    expect(editor.blockers).toHaveLength(0);
  }, 15000);

  it("turns a syntax error into a local finding", async () => {
    const editor = new EditorModel(client);
    await editor.load();
    editor.edit("{ this is not json");
    expect(await editor.validate()).toBe(false);
    expect(editor.findings[0].message).toContain("not valid JSON");
  }, 15000);
});
