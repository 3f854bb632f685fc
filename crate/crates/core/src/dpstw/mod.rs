//! Time-window reservation scheduling.
//!
//! Every arc keeps a sorted list of disjoint half-open windows `[start, end)`.
//! A vehicle may only be on an arc inside a window it reserved, so conflicts
//! and deadlocks are excluded when the schedule is made rather than at run
//! time. Back-to-back windows `[a, b)`, `[b, c)` are legal.

mod plan;

use std::fmt::Write as _;

use crate::fleet::VehicleId;
use crate::guidepath::{ArcId, GuidepathGraph, Route};

pub use plan::{DpstwScheduler, NodeOccupancy, NodeReservationTable, PathPlan};

/// Half-open time interval `[start, end)` in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Interval { start, end }
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A vehicle's exclusive claim on one arc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeWindow {
    pub arc: ArcId,
    pub vehicle: VehicleId,
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn interval(&self) -> Interval {
        Interval::new(self.start, self.end)
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

/// Per-arc reservations, each list sorted by start and pairwise disjoint.
#[derive(Clone, Debug)]
pub struct ArcReservationTable {
    windows: Vec<Vec<TimeWindow>>,
}

impl ArcReservationTable {
    pub fn new(arc_count: usize) -> Self {
        ArcReservationTable {
            windows: vec![Vec::new(); arc_count],
        }
    }

    pub fn for_graph(g: &GuidepathGraph) -> Self {
        Self::new(g.arc_count())
    }

    pub fn windows(&self, arc: ArcId) -> &[TimeWindow] {
        &self.windows[arc.0]
    }

    pub fn len(&self) -> usize {
        self.windows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.iter().all(Vec::is_empty)
    }

    /// Earliest `[s, s + w)` with `s >= t0` that fits on `arc`.
    ///
    /// Scans in time order: before the first reservation if the gap from `t0`
    /// fits, otherwise the first gap between reservations that fits,
    /// otherwise right after the last one.
    pub fn earliest_feasible_window(&self, arc: ArcId, t0: f64, w: f64) -> Interval {
        debug_assert!(w > 0.0);
        let mut cursor = t0;
        for win in &self.windows[arc.0] {
            if win.end <= cursor {
                continue;
            }
            if win.start - cursor >= w {
                break;
            }
            cursor = cursor.max(win.end);
        }
        Interval::new(cursor, cursor + w)
    }

    /// Inserts a window, keeping the list sorted.
    ///
    /// Panics if it overlaps an existing reservation.
    pub fn insert(&mut self, window: TimeWindow) {
        let list = &mut self.windows[window.arc.0];
        let pos = list.partition_point(|w| w.start < window.start);
        let clash = |w: &TimeWindow| w.interval().overlaps(&window.interval());
        assert!(
            !(pos > 0 && clash(&list[pos - 1])) && !(pos < list.len() && clash(&list[pos])),
            "window {window:?} overlaps an existing reservation"
        );
        list.insert(pos, window);
    }

    /// Reserves the route arc by arc, each window the earliest fit after the
    /// previous one ends. The vehicle waits at the node in between when the
    /// next window opens later.
    pub fn reserve_route(
        &mut self,
        g: &GuidepathGraph,
        vehicle: VehicleId,
        route: &Route,
        t_depart: f64,
    ) -> Vec<TimeWindow> {
        let mut t = t_depart;
        let mut out = Vec::with_capacity(route.arcs().len());
        for &arc in route.arcs() {
            let slot = self.earliest_feasible_window(arc, t, g.arc(arc).weight);
            let window = TimeWindow {
                arc,
                vehicle,
                start: slot.start,
                end: slot.end,
            };
            self.insert(window);
            out.push(window);
            t = slot.end;
        }
        out
    }

    /// Drops every window with `end <= now`.
    pub fn release_completed_windows(&mut self, now: f64) -> usize {
        let mut released = 0;
        for list in &mut self.windows {
            let keep = list.partition_point(|w| w.end <= now);
            // lists are disjoint and sorted, so expired windows form a prefix
            released += keep;
            list.drain(..keep);
        }
        released
    }

    /// Removes a vehicle's windows that start at or after `t`.
    pub fn release_vehicle_from(&mut self, vehicle: VehicleId, t: f64) -> usize {
        let mut removed = 0;
        for list in &mut self.windows {
            let before = list.len();
            list.retain(|w| !(w.vehicle == vehicle && w.start >= t));
            removed += before - list.len();
        }
        removed
    }

    pub fn is_consistent(&self) -> bool {
        self.windows.iter().all(|list| {
            list.iter().all(|w| w.end > w.start) && list.windows(2).all(|p| p[0].end <= p[1].start)
        })
    }

    /// CSV dump: `arc_from,arc_to,vehicle,start,end`.
    pub fn to_csv(&self, g: &GuidepathGraph) -> String {
        let mut out = String::from("arc_from,arc_to,vehicle,start,end\n");
        for (i, list) in self.windows.iter().enumerate() {
            let arc = g.arc(ArcId(i));
            for w in list {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    arc.from, arc.to, w.vehicle, w.start, w.end
                );
            }
        }
        out
    }
}
