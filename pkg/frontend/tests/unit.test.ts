import { describe, expect, it } from "vitest";

import { tokensInViolations } from "../src/tree_view.js";
import { UndoStack } from "../src/undo.js";

describe("tokensInViolations", () => {
  it("extracts ids from the server's violation message shapes", () => {
    const flagged = tokensInViolations([
      "token 3: self-loop",
      "cycle: 1,2",
      "multiple roots: tokens 4,5",
      "no root",
    ]);
    expect([...flagged].sort()).toEqual([1, 2, 3, 4, 5]);
  });

  it("is empty for a clean sentence", () => {
    expect(tokensInViolations([]).size).toBe(0);
  });
});

describe("UndoStack", () => {
  it("pops entries in reverse order", () => {
    const stack = new UndoStack();
    stack.push({ sentId: "s1", tokenId: 1, reverse: { head: 2 } });
    stack.push({ sentId: "s1", tokenId: 2, reverse: { deprel: "obj" } });
    expect(stack.size).toBe(2);
    expect(stack.pop()).toMatchObject({ tokenId: 2 });
    expect(stack.pop()).toMatchObject({ tokenId: 1 });
    expect(stack.pop()).toBeUndefined();
  });
});
