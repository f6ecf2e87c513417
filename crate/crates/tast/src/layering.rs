//! Threaded layering of the `M × T` antenna/time array.
//!
//! Thread `j` (1-based) occupies antenna `((t + j - 1) mod M) + 1` at time
//! `t` (0-based). Threads are cyclic diagonals and partition every column.

/// Assignment of antenna/time cells to threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThreadLayout {
    m: usize,
    t: usize,
}

pub fn thread_layout(m: usize, t: usize) -> ThreadLayout {
    assert!(m >= 1 && t >= 1, "layout needs M >= 1 and T >= 1");
    ThreadLayout { m, t }
}

impl ThreadLayout {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Antenna row (1-based) used by `thread` (1-based) at `time` (0-based).
    pub fn cell_of(&self, thread: usize, time: usize) -> usize {
        debug_assert!((1..=self.m).contains(&thread));
        (time + thread - 1) % self.m + 1
    }

    /// Thread (1-based) owning antenna `row` (1-based) at `time`.
    pub fn thread_at(&self, row: usize, time: usize) -> usize {
        debug_assert!((1..=self.m).contains(&row));
        (row + self.m - 1 - time % self.m) % self.m + 1
    }

    /// Rows visited by `thread` at `t = 0, 1, …, T-1`.
    pub fn rows_of(&self, thread: usize) -> Vec<usize> {
        (0..self.t).map(|time| self.cell_of(thread, time)).collect()
    }
}

/// Zero-based variants used internally by the encoders.
pub(crate) fn row0(m: usize, thread0: usize, time: usize) -> usize {
    (time + thread0) % m
}

pub(crate) fn thread0(m: usize, row0: usize, time: usize) -> usize {
    (row0 + m - time % m) % m
}
