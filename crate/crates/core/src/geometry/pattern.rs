use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::{LinearNetwork, NetworkPoint, SpatialWindow, TimeInterval};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarkValues {
    Continuous(Vec<f64>),
    /// `levels` are sorted; `codes[i]` indexes into `levels`.
    Categorical { levels: Vec<String>, codes: Vec<usize> },
}

impl MarkValues {
    pub fn len(&self) -> usize {
        match self {
            MarkValues::Continuous(v) => v.len(),
            MarkValues::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Categorical column from raw labels, levels sorted lexicographically.
    pub fn categorical<S: AsRef<str>>(labels: &[S]) -> Self {
        let levels: Vec<String> = labels
            .iter()
            .map(|s| s.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let codes = labels
            .iter()
            .map(|s| levels.binary_search_by(|l| l.as_str().cmp(s.as_ref())).unwrap())
            .collect();
        MarkValues::Categorical { levels, codes }
    }

    fn select(&self, idx: &[usize]) -> Self {
        match self {
            MarkValues::Continuous(v) => MarkValues::Continuous(idx.iter().map(|&i| v[i]).collect()),
            MarkValues::Categorical { levels, codes } => MarkValues::Categorical {
                levels: levels.clone(),
                codes: idx.iter().map(|&i| codes[i]).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mark {
    pub name: String,
    pub values: MarkValues,
}

/// A spatio-temporal point pattern on a rectangle or on a linear network.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    events: Vec<Event>,
    marks: Vec<Mark>,
    window: SpatialWindow,
    interval: TimeInterval,
    network: Option<Arc<LinearNetwork>>,
    network_coords: Option<Vec<NetworkPoint>>,
}

impl PointPattern {
    /// Planar pattern on an explicit domain. Every event must lie inside it.
    pub fn new(events: Vec<Event>, window: SpatialWindow, interval: TimeInterval) -> Result<Self> {
        check_inside(&events, &window, &interval)?;
        Ok(Self { events, marks: Vec::new(), window, interval, network: None, network_coords: None })
    }

    /// Network pattern from explicit network locations.
    pub fn on_network(
        net: Arc<LinearNetwork>,
        coords: Vec<NetworkPoint>,
        times: Vec<f64>,
        interval: TimeInterval,
    ) -> Result<Self> {
        if coords.len() != times.len() {
            return Err(invalid("network coordinates and times differ in length"));
        }
        for &p in &coords {
            net.check_point(p)?;
        }
        let events: Vec<Event> = coords
            .iter()
            .zip(&times)
            .map(|(&p, &t)| {
                let (x, y) = net.point_xy(p);
                Event { x, y, t }
            })
            .collect();
        let bb = net.bounding_box();
        let window = network_window(bb)?;
        check_inside(&events, &window, &interval)?;
        Ok(Self {
            events,
            marks: Vec::new(),
            window,
            interval,
            network: Some(net),
            network_coords: Some(coords),
        })
    }

    pub fn with_marks(mut self, marks: Vec<Mark>) -> Result<Self> {
        for m in &marks {
            if m.values.len() != self.events.len() {
                return Err(invalid(format!(
                    "mark `{}` has {} values for {} events",
                    m.name,
                    m.values.len(),
                    self.events.len()
                )));
            }
            if let MarkValues::Categorical { levels, .. } = &m.values {
                if levels.is_empty() && !self.events.is_empty() {
                    return Err(invalid(format!("categorical mark `{}` has no levels", m.name)));
                }
            }
        }
        self.marks = marks;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn mark(&self, name: &str) -> Option<&Mark> {
        self.marks.iter().find(|m| m.name == name)
    }

    pub fn window(&self) -> &SpatialWindow {
        &self.window
    }

    pub fn interval(&self) -> &TimeInterval {
        &self.interval
    }

    pub fn network(&self) -> Option<&Arc<LinearNetwork>> {
        self.network.as_ref()
    }

    pub fn network_coords(&self) -> Option<&[NetworkPoint]> {
        self.network_coords.as_deref()
    }

    /// Area of the window, or total length of the network.
    pub fn spatial_measure(&self) -> f64 {
        match &self.network {
            Some(net) => net.total_length(),
            None => self.window.area(),
        }
    }

    /// Space-time volume of the observation domain.
    pub fn volume(&self) -> f64 {
        self.spatial_measure() * self.interval.length()
    }

    /// Sub-pattern of the given event indices, same domain.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            events: idx.iter().map(|&i| self.events[i]).collect(),
            marks: self
                .marks
                .iter()
                .map(|m| Mark { name: m.name.clone(), values: m.values.select(idx) })
                .collect(),
            window: self.window,
            interval: self.interval,
            network: self.network.clone(),
            network_coords: self.network_coords.as_ref().map(|c| idx.iter().map(|&i| c[i]).collect()),
        }
    }

    /// Whether both patterns share the same observation domain.
    pub fn same_domain(&self, other: &Self) -> bool {
        let same_net = match (&self.network, &other.network) {
            (None, None) => true,
            (Some(a), Some(b)) => Arc::ptr_eq(a, b) || **a == **b,
            _ => false,
        };
        same_net && self.window == other.window && self.interval == other.interval
    }
}

impl fmt::Display for PointPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.network {
            Some(net) => {
                writeln!(f, "Spatio-temporal point pattern on a linear network")?;
                writeln!(f, "{} points", self.len())?;
                writeln!(
                    f,
                    "Linear network with {} vertices and {} lines",
                    net.vertices().len(),
                    net.segments().len()
                )?;
            }
            None => {
                writeln!(f, "Spatio-temporal point pattern")?;
                writeln!(f, "{} points", self.len())?;
            }
        }
        let w = &self.window;
        writeln!(f, "Enclosing window: rectangle = [{}, {}] x [{}, {}] units", w.x0, w.x1, w.y0, w.y1)?;
        write!(f, "Time period: [{}, {}]", self.interval.t0, self.interval.t1)
    }
}

fn network_window(bb: [f64; 4]) -> Result<SpatialWindow> {
    // A network may be a single horizontal or vertical line.
    let pad = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let (x0, x1) = pad(bb[0], bb[1]);
    let (y0, y1) = pad(bb[2], bb[3]);
    SpatialWindow::new(x0, x1, y0, y1)
}

fn check_inside(events: &[Event], window: &SpatialWindow, interval: &TimeInterval) -> Result<()> {
    for (i, e) in events.iter().enumerate() {
        if !(e.x.is_finite() && e.y.is_finite() && e.t.is_finite()) {
            return Err(Error::NonFinite { row: i });
        }
        if !window.contains(e.x, e.y) || !interval.contains(e.t) {
            return Err(invalid(format!(
                "event {i} ({}, {}, {}) lies outside the observation domain",
                e.x, e.y, e.t
            )));
        }
    }
    Ok(())
}

/// Builder for patterns from coordinate columns.
#[derive(Debug, Clone, Default)]
pub struct PatternBuilder {
    events: Vec<Event>,
    marks: Vec<Mark>,
    window: Option<SpatialWindow>,
    interval: Option<TimeInterval>,
    network: Option<Arc<LinearNetwork>>,
    snap_max: Option<f64>,
}

impl PatternBuilder {
    pub fn new(events: Vec<Event>) -> Self {
        Self { events, ..Default::default() }
    }

    pub fn from_columns(xs: &[f64], ys: &[f64], ts: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() != ts.len() {
            return Err(invalid("coordinate columns differ in length"));
        }
        let events = xs
            .iter()
            .zip(ys)
            .zip(ts)
            .map(|((&x, &y), &t)| Event { x, y, t })
            .collect();
        Ok(Self::new(events))
    }

    pub fn mark(mut self, name: impl Into<String>, values: MarkValues) -> Self {
        self.marks.push(Mark { name: name.into(), values });
        self
    }

    pub fn window(mut self, w: SpatialWindow) -> Self {
        self.window = Some(w);
        self
    }

    pub fn interval(mut self, iv: TimeInterval) -> Self {
        self.interval = Some(iv);
        self
    }

    pub fn network(mut self, net: Arc<LinearNetwork>) -> Self {
        self.network = Some(net);
        self
    }

    /// Maximum snapping distance; defaults to 5% of the network's
    /// bounding-box diagonal.
    pub fn snap_max(mut self, d: f64) -> Self {
        self.snap_max = Some(d);
        self
    }

    pub fn build(self) -> Result<PointPattern> {
        if self.events.is_empty() {
            return Err(Error::Empty("point pattern has no events".into()));
        }
        for (i, e) in self.events.iter().enumerate() {
            if !(e.x.is_finite() && e.y.is_finite() && e.t.is_finite()) {
                return Err(Error::NonFinite { row: i });
            }
        }
        let interval = match self.interval {
            Some(iv) => iv,
            None => {
                let (lo, hi) = range(self.events.iter().map(|e| e.t));
                TimeInterval::new(lo, hi).map_err(|_| {
                    invalid("all events share one time; supply an explicit interval")
                })?
            }
        };
        let pattern = match self.network {
            Some(net) => {
                let bb = net.bounding_box();
                let diag = (bb[1] - bb[0]).hypot(bb[3] - bb[2]);
                let max = self.snap_max.unwrap_or(0.05 * diag);
                let mut coords = Vec::with_capacity(self.events.len());
                for (i, e) in self.events.iter().enumerate() {
                    let (p, d) = net.project(e.x, e.y);
                    if d > max {
                        return Err(Error::OffNetwork { index: i, distance: d, max });
                    }
                    coords.push(p);
                }
                let times = self.events.iter().map(|e| e.t).collect();
                let mut p = PointPattern::on_network(net, coords, times, interval)?;
                if let Some(w) = self.window {
                    check_inside(&p.events, &w, &interval)?;
                    p.window = w;
                }
                p
            }
            None => {
                let window = match self.window {
                    Some(w) => w,
                    None => {
                        let (x0, x1) = range(self.events.iter().map(|e| e.x));
                        let (y0, y1) = range(self.events.iter().map(|e| e.y));
                        SpatialWindow::new(x0, x1, y0, y1).map_err(|_| {
                            invalid("enclosing window is degenerate; supply an explicit window")
                        })?
                    }
                };
                PointPattern::new(self.events, window, interval)?
            }
        };
        pattern.with_marks(self.marks)
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Builds a pattern from string rows: three numeric coordinate columns
/// followed by optional mark columns. A mark column whose every entry parses
/// as a number is continuous, otherwise categorical.
pub fn pattern_from_table(
    rows: &[Vec<String>],
    names: Option<&[String]>,
    network: Option<Arc<LinearNetwork>>,
) -> Result<PointPattern> {
    let mut builder = table_builder(rows, names)?;
    if let Some(net) = network {
        builder = builder.network(net);
    }
    builder.build()
}

/// Parses string rows into a builder so the domain can still be set.
pub fn table_builder(rows: &[Vec<String>], names: Option<&[String]>) -> Result<PatternBuilder> {
    if rows.is_empty() {
        return Err(Error::Empty("table has no rows".into()));
    }
    let width = rows[0].len();
    if width < 3 {
        return Err(invalid("table needs at least the x, y and t columns"));
    }
    let mut events = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(invalid(format!("row {i} has {} fields, expected {width}", row.len())));
        }
        let num = |k: usize| -> Result<f64> {
            row[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("row {i}, column {k}: `{}` is not a number", row[k])))
        };
        let (x, y, t) = (num(0)?, num(1)?, num(2)?);
        if !(x.is_finite() && y.is_finite() && t.is_finite()) {
            return Err(Error::NonFinite { row: i });
        }
        events.push(Event { x, y, t });
    }
    let mut builder = PatternBuilder::new(events);
    for k in 3..width {
        let name = names
            .and_then(|n| n.get(k - 3).cloned())
            .unwrap_or_else(|| format!("m{}", k - 2));
        let raw: Vec<&str> = rows.iter().map(|r| r[k].trim()).collect();
        let parsed: Option<Vec<f64>> = raw.iter().map(|s| s.parse::<f64>().ok()).collect();
        let values = match parsed {
            Some(v) => MarkValues::Continuous(v),
            None => MarkValues::categorical(&raw),
        };
        builder = builder.mark(name, values);
    }
    Ok(builder)
}
