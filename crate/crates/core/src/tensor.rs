//! Dense d-tensors over the temporal (1..p) and spatial (1..n) index ranges.
//!
//! A vertical logical index is stored as two adjacent axes, spatial first:
//! vertical-up is `(spatial-up, temporal-down)`, vertical-down is
//! `(spatial-down, temporal-up)`.

use std::fmt;

use crate::jet::Dims;
use crate::scalar::Scalar;

/// Storage axis kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    TemporalUp,
    TemporalDown,
    SpatialUp,
    SpatialDown,
}

impl Axis {
    pub fn is_temporal(self) -> bool {
        matches!(self, Axis::TemporalUp | Axis::TemporalDown)
    }

    pub fn is_up(self) -> bool {
        matches!(self, Axis::TemporalUp | Axis::SpatialUp)
    }

    pub fn flipped(self) -> Axis {
        match self {
            Axis::TemporalUp => Axis::TemporalDown,
            Axis::TemporalDown => Axis::TemporalUp,
            Axis::SpatialUp => Axis::SpatialDown,
            Axis::SpatialDown => Axis::SpatialUp,
        }
    }

    pub fn extent(self, dims: Dims) -> usize {
        if self.is_temporal() {
            dims.p
        } else {
            dims.n
        }
    }
}

/// Logical index slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    TemporalUp,
    TemporalDown,
    SpatialUp,
    SpatialDown,
    VerticalUp,
    VerticalDown,
}

impl Slot {
    pub fn axes(self) -> &'static [Axis] {
        match self {
            Slot::TemporalUp => &[Axis::TemporalUp],
            Slot::TemporalDown => &[Axis::TemporalDown],
            Slot::SpatialUp => &[Axis::SpatialUp],
            Slot::SpatialDown => &[Axis::SpatialDown],
            Slot::VerticalUp => &[Axis::SpatialUp, Axis::TemporalDown],
            Slot::VerticalDown => &[Axis::SpatialDown, Axis::TemporalUp],
        }
    }

    fn from_axis(a: Axis) -> Slot {
        match a {
            Axis::TemporalUp => Slot::TemporalUp,
            Axis::TemporalDown => Slot::TemporalDown,
            Axis::SpatialUp => Slot::SpatialUp,
            Axis::SpatialDown => Slot::SpatialDown,
        }
    }

    fn is_vertical(self) -> bool {
        matches!(self, Slot::VerticalUp | Slot::VerticalDown)
    }

    fn dual(self) -> Slot {
        match self {
            Slot::TemporalUp => Slot::TemporalDown,
            Slot::TemporalDown => Slot::TemporalUp,
            Slot::SpatialUp => Slot::SpatialDown,
            Slot::SpatialDown => Slot::SpatialUp,
            Slot::VerticalUp => Slot::VerticalDown,
            Slot::VerticalDown => Slot::VerticalUp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("cannot contract slot {a:?} with slot {b:?}: {reason}")]
    ContractMismatch { a: Slot, b: Slot, reason: &'static str },
    #[error("cannot raise/lower slot {slot:?} with a metric of signature {metric:?}")]
    RaiseLowerMismatch { slot: Slot, metric: Vec<Slot> },
    #[error("singular metric: determinant estimate {det:e}, condition number {cond:e}")]
    SingularMetric { det: f64, cond: f64 },
    #[error("matrix is not symmetric (max asymmetry {asym:e})")]
    NotSymmetric { asym: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Dense row-major tensor with a typed index signature.
#[derive(Clone, Debug, PartialEq)]
pub struct DTensor<S> {
    slots: Vec<Slot>,
    axes: Vec<Axis>,
    dims: Dims,
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> DTensor<S> {
    pub fn zeros(slots: &[Slot], dims: Dims) -> Self {
        let axes: Vec<Axis> = slots.iter().flat_map(|s| s.axes().iter().copied()).collect();
        let shape: Vec<usize> = axes.iter().map(|a| a.extent(dims)).collect();
        let len = shape.iter().product();
        DTensor { slots: slots.to_vec(), axes, dims, shape, data: vec![S::zero(); len] }
    }

    pub fn scalar(v: S, dims: Dims) -> Self {
        let mut t = Self::zeros(&[], dims);
        t.data[0] = v;
        t
    }

    pub fn from_fn(slots: &[Slot], dims: Dims, mut f: impl FnMut(&[usize]) -> S) -> Self {
        let mut t = Self::zeros(slots, dims);
        let mut idx = vec![0; t.shape.len()];
        for k in 0..t.data.len() {
            t.data[k] = f(&idx);
            t.advance(&mut idx);
        }
        t
    }

    pub fn from_vec(slots: &[Slot], dims: Dims, data: Vec<S>) -> Result<Self, TensorError> {
        let mut t = Self::zeros(slots, dims);
        if data.len() != t.data.len() {
            return Err(TensorError::Shape(format!(
                "expected {} components, got {}",
                t.data.len(),
                data.len()
            )));
        }
        t.data = data;
        Ok(t)
    }

    /// Increment a row-major multi-index in place.
    fn advance(&self, idx: &mut [usize]) {
        for a in (0..idx.len()).rev() {
            idx[a] += 1;
            if idx[a] < self.shape[a] {
                return;
            }
            idx[a] = 0;
        }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut off = 0;
        for (k, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.shape[k]);
            off = off * self.shape[k] + i;
        }
        off
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> S {
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: &[usize], v: S) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    #[inline]
    pub fn add_at(&mut self, idx: &[usize], v: S) {
        let o = self.offset(idx);
        self.data[o] += v;
    }

    /// Visit every multi-index in storage order.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.data.len());
        let mut idx = vec![0; self.shape.len()];
        for _ in 0..self.data.len() {
            out.push(idx.clone());
            self.advance(&mut idx);
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> DTensor<T> {
        DTensor {
            slots: self.slots.clone(),
            axes: self.axes.clone(),
            dims: self.dims,
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &DTensor<S>, f: impl Fn(S, S) -> S) -> DTensor<S> {
        assert_eq!(self.axes, other.axes, "zip over mismatched signatures");
        let mut out = self.clone();
        for (o, &b) in out.data.iter_mut().zip(&other.data) {
            *o = f(*o, b);
        }
        out
    }

    pub fn scale(&self, k: S) -> DTensor<S> {
        self.map(|v| v * k)
    }

    pub fn add(&self, other: &DTensor<S>) -> DTensor<S> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DTensor<S>) -> DTensor<S> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Largest component magnitude (real parts).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.re().abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Real parts as doubles.
    pub fn re(&self) -> DTensor<f64> {
        self.map(|v| v.re())
    }

    /// Storage axis range of logical slot `s`.
    pub fn slot_axes(&self, s: usize) -> std::ops::Range<usize> {
        let start: usize = self.slots[..s].iter().map(|sl| sl.axes().len()).sum();
        start..start + self.slots[s].axes().len()
    }

    /// Reinterpret storage with new slots covering identical axes.
    pub fn with_slots(mut self, slots: &[Slot]) -> Result<Self, TensorError> {
        let axes: Vec<Axis> = slots.iter().flat_map(|s| s.axes().iter().copied()).collect();
        if axes != self.axes {
            return Err(TensorError::Shape(format!("slots {slots:?} do not cover axes {:?}", self.axes)));
        }
        self.slots = slots.to_vec();
        Ok(self)
    }

    /// Trace over logical slots `up` and `dn`.
    pub fn contract(&self, up: usize, dn: usize) -> Result<DTensor<S>, TensorError> {
        let (a, b) = (self.slots[up], self.slots[dn]);
        if up == dn {
            return Err(TensorError::ContractMismatch { a, b, reason: "same slot" });
        }
        if a.dual() != b {
            let reason = if a.is_vertical() != b.is_vertical()
                || a.axes()[0].is_temporal() != b.axes()[0].is_temporal()
            {
                "different index families"
            } else {
                "same variance"
            };
            return Err(TensorError::ContractMismatch { a, b, reason });
        }
        let pairs: Vec<(usize, usize)> =
            self.slot_axes(up).zip(self.slot_axes(dn)).collect();
        let mut out_slots = Vec::new();
        let mut keep_axes = Vec::new();
        for (k, sl) in self.slots.iter().enumerate() {
            if k != up && k != dn {
                out_slots.push(*sl);
                keep_axes.extend(self.slot_axes(k));
            }
        }
        let mut out = DTensor::zeros(&out_slots, self.dims);
        let mut full = vec![0usize; self.shape.len()];
        let diag_shape: Vec<usize> = pairs.iter().map(|&(x, _)| self.shape[x]).collect();
        let diag_count: usize = diag_shape.iter().product();
        for (o, oidx) in out.indices().into_iter().enumerate() {
            for (k, &ax) in keep_axes.iter().enumerate() {
                full[ax] = oidx[k];
            }
            let mut acc = S::zero();
            for mut d in 0..diag_count {
                for (k, &(x, y)) in pairs.iter().enumerate().rev() {
                    let i = d % diag_shape[k];
                    d /= diag_shape[k];
                    full[x] = i;
                    full[y] = i;
                }
                acc += self.get(&full);
            }
            out.data[o] = acc;
        }
        Ok(out)
    }

    /// Contract a rank-2 metric into logical slot `slot`, flipping its variance.
    pub fn raise_lower(&self, slot: usize, metric: &DTensor<S>) -> Result<DTensor<S>, TensorError> {
        let s = self.slots[slot];
        let mismatch = || TensorError::RaiseLowerMismatch { slot: s, metric: metric.slots.to_vec() };
        if s.is_vertical() || metric.slots.len() != 2 || metric.slots[0] != metric.slots[1] {
            return Err(mismatch());
        }
        let m = metric.slots[0];
        // the metric's slots must be the dual of `s`, e.g. g_{ij} lowers a spatial-up slot
        if m != s.dual() {
            return Err(mismatch());
        }
        let ax = self.slot_axes(slot).start;
        let k = self.shape[ax];
        let mut slots = self.slots.clone();
        slots[slot] = Slot::from_axis(self.axes[ax].flipped());
        let mut out = DTensor::zeros(&slots, self.dims);
        let mut src = vec![0; self.shape.len()];
        for (o, idx) in out.indices().into_iter().enumerate() {
            src.copy_from_slice(&idx);
            let mut acc = S::zero();
            for r in 0..k {
                src[ax] = r;
                acc += metric.get(&[idx[ax], r]) * self.get(&src);
            }
            out.data[o] = acc;
        }
        Ok(out)
    }

    /// Move storage axes into a new order: axis `perm[k]` of `self` becomes
    /// axis `k` of the result. Slots are rebuilt one per axis.
    pub fn permute_axes(&self, perm: &[usize]) -> DTensor<S> {
        assert_eq!(perm.len(), self.axes.len());
        let slots: Vec<Slot> = perm.iter().map(|&a| Slot::from_axis(self.axes[a])).collect();
        let mut out = DTensor::zeros(&slots, self.dims);
        let mut src = vec![0; perm.len()];
        for (o, idx) in out.indices().into_iter().enumerate() {
            for (k, &a) in perm.iter().enumerate() {
                src[a] = idx[k];
            }
            out.data[o] = self.get(&src);
        }
        out
    }
}

impl<S: Scalar> fmt::Display for DTensor<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DTensor{:?}{:?}", self.slots, self.shape)
    }
}

/// Inverse of a symmetric, nonsingular rank-2 metric (both slots down or both up).
pub fn sym_inverse<S: Scalar>(m: &DTensor<S>) -> Result<DTensor<S>, TensorError> {
    let slots = m.slots();
    let ok = slots.len() == 2
        && slots[0] == slots[1]
        && !slots[0].is_vertical();
    if !ok {
        return Err(TensorError::Shape(format!("sym_inverse needs a rank-2 same-family metric, got {slots:?}")));
    }
    let k = m.shape()[0];
    let inv = crate::linalg::sym_inverse(m.data(), k)?;
    DTensor::from_vec(&[slots[0].dual(), slots[0].dual()], m.dims(), inv)
}
