//! Tracks reads of information that honest miners must not use.
//!
//! Honest decisions run inside [`decision_scope`]. Any read of a block's true
//! creation time or true arrival time while a scope is open counts as a
//! violation for the current thread.

use std::cell::Cell;

thread_local! {
    static DEPTH: Cell<u32> = const { Cell::new(0) };
    static VIOLATIONS: Cell<u64> = const { Cell::new(0) };
}

pub(crate) fn note_hidden_read() {
    if DEPTH.with(Cell::get) > 0 {
        VIOLATIONS.with(|v| v.set(v.get() + 1));
    }
}

/// Runs `f` as an honest miner's decision.
pub fn decision_scope<R>(f: impl FnOnce() -> R) -> R {
    struct Guard;
    impl Drop for Guard {
        fn drop(&mut self) {
            DEPTH.with(|d| d.set(d.get() - 1));
        }
    }
    DEPTH.with(|d| d.set(d.get() + 1));
    let _guard = Guard;
    f()
}

/// Hidden-information reads made inside decision scopes on this thread.
pub fn violations() -> u64 {
    VIOLATIONS.with(Cell::get)
}

pub fn reset() {
    VIOLATIONS.with(|v| v.set(0));
}
