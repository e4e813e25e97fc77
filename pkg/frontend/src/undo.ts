// Session-local undo: every applied edit remembers the values it replaced,
// and undo issues the reverse PATCH (the server audit log stays the record
// of both directions).

import type { TokenPatchBody } from "./types.js";

export interface UndoEntry {
  sentId: string;
  tokenId: number;
  reverse: TokenPatchBody;
}

export class UndoStack {
  private entries: UndoEntry[] = [];

  push(entry: UndoEntry): void {
    this.entries.push(entry);
  }

  pop(): UndoEntry | undefined {
    return this.entries.pop();
  }

  get size(): number {
    return this.entries.length;
  }
}
