use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::fleet::VehicleId;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    /// operator task `index` of the stream is issued
    TaskCreated(usize),
    /// the vehicle's reserved window on its next arc opens
    WindowStart {
        vehicle: VehicleId,
        epoch: u64,
    },
    VehicleArrived {
        vehicle: VehicleId,
        epoch: u64,
    },
    /// a delayed vehicle may continue
    Resume {
        vehicle: VehicleId,
        epoch: u64,
    },
    InjectDelay {
        vehicle: VehicleId,
        duration: f64,
    },
    MonitorTick,
}

#[derive(Clone, Copy, Debug)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    /// Reversed so the max-heap pops the earliest `(time, seq)`.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Pending events ordered by `(time, seq)`; `seq` is the insertion count.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
    now: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Panics if `time` is earlier than the last popped event.
    pub fn push(&mut self, time: f64, kind: EventKind) {
        assert!(
            time >= self.now,
            "event at {time} scheduled in the past (now {})",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn pop(&mut self) -> Option<Event> {
        let e = self.heap.pop()?;
        self.now = e.time;
        Some(e)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_by_time_then_insertion() {
        let mut q = EventQueue::new();
        q.push(5.0, EventKind::TaskCreated(0));
        q.push(1.0, EventKind::TaskCreated(1));
        q.push(5.0, EventKind::TaskCreated(2));
        q.push(1.0, EventKind::MonitorTick);
        let order: Vec<_> = std::iter::from_fn(|| q.pop())
            .map(|e| (e.time, e.kind))
            .collect();
        assert_eq!(
            order,
            vec![
                (1.0, EventKind::TaskCreated(1)),
                (1.0, EventKind::MonitorTick),
                (5.0, EventKind::TaskCreated(0)),
                (5.0, EventKind::TaskCreated(2)),
            ]
        );
    }

    #[test]
    #[should_panic]
    fn past_events_are_rejected() {
        let mut q = EventQueue::new();
        q.push(3.0, EventKind::MonitorTick);
        q.pop();
        q.push(2.0, EventKind::MonitorTick);
    }
}
