//! The convolution *-algebra of a relation groupoid.
//!
//! An element assigns to every arrow `(x,y)` a complex value together with
//! first-order jets: partials in the source coordinates and in the target
//! coordinates. Convolution sums over the class of `x` with the atomic
//! weights as quadrature,
//!
//! ```text
//! (a*b)(x,y) = Σ_{z ∈ [x]} a(x,z) b(z,y) w_z
//! ```
//!
//! so unit weights give the plain finite sum and general weights give the
//! weighted integral over the class. Jets propagate by linearity: the
//! source partials of `a*b` only see `a`, the target partials only see `b`.
//! Compact support is automatic on a finite groupoid.

use std::io::{Read, Write};
use std::ops::{Add, Mul};
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;

use crate::diffspace::{DiffSpace, PointId};
use crate::error::{Error, Result};
use crate::expr::{self, Expr, Symbols};
use crate::groupoid::{inverse, Arrow, Groupoid};

pub type C64 = Complex64;

/// Value and first-order partials of an element at one arrow.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: C64,
    pub d_src: Vec<C64>,
    pub d_dst: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Jets {
    // arrow-major, `dim` entries per arrow
    d_src: Vec<C64>,
    d_dst: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct AlgebraElement {
    groupoid: Arc<Groupoid>,
    values: Vec<C64>,
    jets: Option<Jets>,
    /// Real arrow expression in `x1..xn, y1..yn` the values were tabulated
    /// from, when known. Used to recompute jets of derived elements.
    symbolic: Option<Arc<Expr>>,
}

/// Weighted convolution over blocks, generic in the scalar so the same loop
/// serves floating point and exact rational arithmetic. `weights` is indexed
/// by space point position.
pub(crate) fn convolve_blocks<T>(g: &Groupoid, a: &[T], b: &[T], weights: &[T]) -> Vec<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    let mut out = vec![T::zero(); g.arrow_count()];
    for block in g.blocks() {
        let m = block.size();
        let o = block.offset;
        for i in 0..m {
            for j in 0..m {
                let mut acc = T::zero();
                for k in 0..m {
                    let w = weights[block.space_index[k]].clone();
                    acc = acc + a[o + i * m + k].clone() * b[o + k * m + j].clone() * w;
                }
                out[o + i * m + j] = acc;
            }
        }
    }
    out
}

fn coords_of(space: &DiffSpace, id: PointId) -> &[f64] {
    &space.point(id).expect("arrow endpoints are base points").coords
}

impl AlgebraElement {
    /// Tabulates a real expression in `x1..xn` (source) and `y1..yn` (target)
    /// onto every arrow, with exact symbolic partials as jets.
    pub fn from_expression(g: &Arc<Groupoid>, src: &str) -> Result<Self> {
        let e = Expr::parse(src, Symbols::Arrow { dim: g.dimension() })?;
        Self::from_expr(g, &e)
    }

    pub fn from_expr(g: &Arc<Groupoid>, e: &Expr) -> Result<Self> {
        let n = g.dimension();
        if let Some(slot) = e.max_slot() {
            if slot >= 2 * n {
                return Err(Error::DimensionMismatch {
                    expected: 2 * n,
                    found: slot + 1,
                });
            }
        }
        let d_src_exprs: Vec<Expr> = (0..n).map(|i| e.diff(i)).collect();
        let d_dst_exprs: Vec<Expr> = (0..n).map(|i| e.diff(n + i)).collect();
        let space = g.space();
        let count = g.arrow_count();
        let mut values = Vec::with_capacity(count);
        let mut d_src = Vec::with_capacity(count * n);
        let mut d_dst = Vec::with_capacity(count * n);
        let mut vars = vec![0.0; 2 * n];
        for a in g.arrows() {
            vars[..n].copy_from_slice(coords_of(space, a.src));
            vars[n..].copy_from_slice(coords_of(space, a.dst));
            values.push(C64::new(e.eval_finite(&vars)?, 0.0));
            for d in &d_src_exprs {
                d_src.push(C64::new(d.eval_finite(&vars)?, 0.0));
            }
            for d in &d_dst_exprs {
                d_dst.push(C64::new(d.eval_finite(&vars)?, 0.0));
            }
        }
        Ok(AlgebraElement {
            groupoid: g.clone(),
            values,
            jets: Some(Jets { d_src, d_dst }),
            symbolic: Some(Arc::new(e.clone())),
        })
    }

    /// Values only, in arrow storage order.
    pub fn from_values(g: &Arc<Groupoid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != g.arrow_count() {
            return Err(Error::DimensionMismatch {
                expected: g.arrow_count(),
                found: values.len(),
            });
        }
        Ok(AlgebraElement {
            groupoid: g.clone(),
            values,
            jets: None,
            symbolic: None,
        })
    }

    /// Values with jets; `d_src` and `d_dst` hold `dim` entries per arrow.
    pub fn from_jets(
        g: &Arc<Groupoid>,
        values: Vec<C64>,
        d_src: Vec<C64>,
        d_dst: Vec<C64>,
    ) -> Result<Self> {
        let mut el = Self::from_values(g, values)?;
        let want = g.arrow_count() * g.dimension();
        for len in [d_src.len(), d_dst.len()] {
            if len != want {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    found: len,
                });
            }
        }
        el.jets = Some(Jets { d_src, d_dst });
        Ok(el)
    }

    pub fn from_fn(g: &Arc<Groupoid>, f: impl Fn(Arrow) -> C64) -> Self {
        let values = g.arrows().map(f).collect();
        Self::from_values(g, values).expect("one value per arrow")
    }

    /// A constant element, with zero jets.
    pub fn constant(g: &Arc<Groupoid>, c: C64) -> Self {
        let n = g.arrow_count() * g.dimension();
        AlgebraElement {
            groupoid: g.clone(),
            values: vec![c; g.arrow_count()],
            jets: Some(Jets {
                d_src: vec![C64::zero(); n],
                d_dst: vec![C64::zero(); n],
            }),
            symbolic: (c.im == 0.0).then(|| Arc::new(Expr::Const(c.re))),
        }
    }

    pub fn zero(g: &Arc<Groupoid>) -> Self {
        Self::constant(g, C64::zero())
    }

    /// The weighted delta `1/w_x` on units, zero elsewhere. It is the
    /// identity for the atomic-measure convolution; it has no continuum
    /// analogue.
    pub fn unit(g: &Arc<Groupoid>) -> Self {
        let space = g.space().clone();
        let mut el = Self::zero(g);
        el.symbolic = None;
        for (i, a) in g.arrows().enumerate() {
            if a.is_unit() {
                el.values[i] = C64::new(1.0 / space.weight(a.src).expect("base point"), 0.0);
            }
        }
        el
    }

    pub fn groupoid(&self) -> &Arc<Groupoid> {
        &self.groupoid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn value(&self, a: Arrow) -> Option<C64> {
        self.groupoid.arrow_index(a).map(|i| self.values[i])
    }

    pub fn has_jets(&self) -> bool {
        self.jets.is_some()
    }

    pub fn symbolic(&self) -> Option<&Expr> {
        self.symbolic.as_deref()
    }

    pub fn jet(&self, a: Arrow) -> Option<Jet> {
        let i = self.groupoid.arrow_index(a)?;
        let jets = self.jets.as_ref()?;
        let n = self.groupoid.dimension();
        Some(Jet {
            value: self.values[i],
            d_src: jets.d_src[i * n..(i + 1) * n].to_vec(),
            d_dst: jets.d_dst[i * n..(i + 1) * n].to_vec(),
        })
    }

    /// Source and target partials at arrow index `i`.
    pub fn partials(&self, i: usize) -> Option<(&[C64], &[C64])> {
        let jets = self.jets.as_ref()?;
        let n = self.groupoid.dimension();
        Some((&jets.d_src[i * n..(i + 1) * n], &jets.d_dst[i * n..(i + 1) * n]))
    }

    /// Drops jets but keeps values and any symbolic source.
    pub fn without_jets(mut self) -> Self {
        self.jets = None;
        self
    }

    pub(crate) fn with_symbolic(mut self, e: Option<Expr>) -> Self {
        self.symbolic = e.map(Arc::new);
        self
    }

    /// This element with jets, recomputed from the symbolic source when the
    /// stored jets are absent.
    pub fn with_jets(&self) -> Result<AlgebraElement> {
        if self.jets.is_some() {
            return Ok(self.clone());
        }
        match &self.symbolic {
            Some(e) => Self::from_expr(&self.groupoid, e),
            None => Err(Error::MissingJets(
                "element has no jets and no symbolic source".into(),
            )),
        }
    }

    fn check_same(&self, other: &AlgebraElement) -> Result<()> {
        if self.groupoid.same_as(&other.groupoid) {
            Ok(())
        } else {
            Err(Error::GroupoidMismatch)
        }
    }

    fn zip_with(
        &self,
        other: &AlgebraElement,
        f: impl Fn(C64, C64) -> C64,
        sym: impl Fn(Expr, Expr) -> Expr,
    ) -> Result<AlgebraElement> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let jets = match (&self.jets, &other.jets) {
            (Some(p), Some(q)) => Some(Jets {
                d_src: p.d_src.iter().zip(&q.d_src).map(|(&x, &y)| f(x, y)).collect(),
                d_dst: p.d_dst.iter().zip(&q.d_dst).map(|(&x, &y)| f(x, y)).collect(),
            }),
            _ => None,
        };
        let symbolic = match (&self.symbolic, &other.symbolic) {
            (Some(p), Some(q)) => Some(Arc::new(sym((**p).clone(), (**q).clone()))),
            _ => None,
        };
        Ok(AlgebraElement {
            groupoid: self.groupoid.clone(),
            values,
            jets,
            symbolic,
        })
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.zip_with(other, |x, y| x + y, expr::add)
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.zip_with(other, |x, y| x - y, |p, q| Expr::Sub(Box::new(p), Box::new(q)))
    }

    pub fn scale(&self, c: C64) -> AlgebraElement {
        AlgebraElement {
            groupoid: self.groupoid.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
            jets: self.jets.as_ref().map(|j| Jets {
                d_src: j.d_src.iter().map(|&v| v * c).collect(),
                d_dst: j.d_dst.iter().map(|&v| v * c).collect(),
            }),
            symbolic: match &self.symbolic {
                Some(e) if c.im == 0.0 => Some(Arc::new(expr::mul(Expr::Const(c.re), (**e).clone()))),
                _ => None,
            },
        }
    }

    /// Largest absolute value over arrows.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute difference of values over arrows.
    pub fn max_abs_diff(&self, other: &AlgebraElement) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max))
    }

    /// `(a*b)(x,y) = Σ_{z∈[x]} a(x,z) b(z,y) w_z`, with jets carried along
    /// when both factors have them.
    pub fn convolve(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_same(other)?;
        let g = &self.groupoid;
        let weights: Vec<C64> = g
            .space()
            .points()
            .iter()
            .map(|p| C64::new(p.weight, 0.0))
            .collect();
        let values = convolve_blocks(g, &self.values, &other.values, &weights);
        let jets = match (&self.jets, &other.jets) {
            (Some(ja), Some(jb)) => Some(self.convolve_jets(ja, other, jb, &weights)),
            _ => None,
        };
        Ok(AlgebraElement {
            groupoid: g.clone(),
            values,
            jets,
            symbolic: None,
        })
    }

    fn convolve_jets(&self, ja: &Jets, other: &AlgebraElement, jb: &Jets, weights: &[C64]) -> Jets {
        let g = &self.groupoid;
        let n = g.dimension();
        let mut d_src = vec![C64::zero(); g.arrow_count() * n];
        let mut d_dst = vec![C64::zero(); g.arrow_count() * n];
        for block in g.blocks() {
            let m = block.size();
            let o = block.offset;
            for i in 0..m {
                for j in 0..m {
                    let out = o + i * m + j;
                    for k in 0..m {
                        let w = weights[block.space_index[k]];
                        let left = o + i * m + k;
                        let right = o + k * m + j;
                        let bw = other.values[right] * w;
                        let aw = self.values[left] * w;
                        for d in 0..n {
                            d_src[out * n + d] += ja.d_src[left * n + d] * bw;
                            d_dst[out * n + d] += aw * jb.d_dst[right * n + d];
                        }
                    }
                }
            }
        }
        Jets { d_src, d_dst }
    }

    /// `a*(x,y) = conj(a(y,x))`. Source and target partials trade places.
    pub fn involution(&self) -> AlgebraElement {
        let g = &self.groupoid;
        let n = g.dimension();
        let mut values = vec![C64::zero(); g.arrow_count()];
        let mut jets = self.jets.as_ref().map(|_| Jets {
            d_src: vec![C64::zero(); g.arrow_count() * n],
            d_dst: vec![C64::zero(); g.arrow_count() * n],
        });
        for (i, a) in g.arrows().enumerate() {
            let r = g.arrow_index(inverse(a)).expect("arrows have inverses");
            values[i] = self.values[r].conj();
            if let (Some(out), Some(src)) = (jets.as_mut(), self.jets.as_ref()) {
                for d in 0..n {
                    out.d_src[i * n + d] = src.d_dst[r * n + d].conj();
                    out.d_dst[i * n + d] = src.d_src[r * n + d].conj();
                }
            }
        }
        let symbolic = self.symbolic.as_ref().map(|e| {
            Arc::new(e.substitute(&|s| Expr::Var(if s < n { s + n } else { s - n })))
        });
        AlgebraElement {
            groupoid: g.clone(),
            values,
            jets,
            symbolic,
        }
    }

    /// Left action of the diagonal functions: `(Q(f)a)(x,y) = f(x)·a(x,y)`.
    /// Jets follow the product rule; `f` must carry gradients when `a`
    /// carries jets.
    pub fn module_action(&self, f: &BaseFunction) -> Result<AlgebraElement> {
        let g = &self.groupoid;
        let n = g.dimension();
        if f.values.len() != g.space().len() {
            return Err(Error::DimensionMismatch {
                expected: g.space().len(),
                found: f.values.len(),
            });
        }
        let src_index: Vec<usize> = g
            .arrows()
            .map(|a| g.space().index_of(a.src).expect("base point"))
            .collect();
        let values = self
            .values
            .iter()
            .zip(&src_index)
            .map(|(&v, &p)| f.values[p] * v)
            .collect();
        let jets = match &self.jets {
            None => None,
            Some(j) => {
                let grads = f.gradients.as_ref().ok_or_else(|| {
                    Error::MissingGradient("module action on an element with jets".into())
                })?;
                let mut d_src = Vec::with_capacity(j.d_src.len());
                let mut d_dst = Vec::with_capacity(j.d_dst.len());
                for (i, &p) in src_index.iter().enumerate() {
                    let fv = f.values[p];
                    for d in 0..n {
                        d_src.push(grads[p * n + d] * self.values[i] + fv * j.d_src[i * n + d]);
                        d_dst.push(fv * j.d_dst[i * n + d]);
                    }
                }
                Some(Jets { d_src, d_dst })
            }
        };
        let symbolic = match (&self.symbolic, &f.expr, f.is_real) {
            (Some(a), Some(fe), true) => Some(Arc::new(expr::mul(fe.clone(), (**a).clone()))),
            _ => None,
        };
        Ok(AlgebraElement {
            groupoid: g.clone(),
            values,
            jets,
            symbolic,
        })
    }

    /// Writes one record per arrow: `src,dst,re,im` followed by real and
    /// imaginary parts of the source partials, then of the target partials,
    /// when jets are present.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.groupoid.dimension();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["src".to_string(), "dst".into(), "re".into(), "im".into()];
        if self.jets.is_some() {
            for side in ["dsrc", "ddst"] {
                for d in 1..=n {
                    header.push(format!("{side}{d}_re"));
                    header.push(format!("{side}{d}_im"));
                }
            }
        }
        out.write_record(&header)?;
        for (i, a) in self.groupoid.arrows().enumerate() {
            let v = self.values[i];
            let mut rec = vec![a.src.to_string(), a.dst.to_string(), v.re.to_string(), v.im.to_string()];
            if let Some((ds, dd)) = self.partials(i) {
                for z in ds.iter().chain(dd) {
                    rec.push(z.re.to_string());
                    rec.push(z.im.to_string());
                }
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the format of [`write_csv`](Self::write_csv). Every arrow must
    /// appear exactly once.
    pub fn read_csv<R: Read>(g: &Arc<Groupoid>, r: R) -> Result<AlgebraElement> {
        let n = g.dimension();
        let mut rdr = csv::Reader::from_reader(r);
        let width = rdr.headers()?.len();
        let with_jets = match width {
            4 => false,
            w if w == 4 + 4 * n && n > 0 => true,
            w => return Err(Error::Format(format!("unexpected column count {w}"))),
        };
        let count = g.arrow_count();
        let mut values = vec![None; count];
        let mut d_src = vec![C64::zero(); count * n];
        let mut d_dst = vec![C64::zero(); count * n];
        for rec in rdr.records() {
            let rec = rec?;
            let num = |k: usize| -> Result<f64> {
                rec[k]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("bad number `{}`", &rec[k])))
            };
            let id = |k: usize| -> Result<PointId> {
                rec[k]
                    .trim()
                    .parse()
                    .map(PointId)
                    .map_err(|_| Error::Format(format!("bad point id `{}`", &rec[k])))
            };
            let a = Arrow::new(id(0)?, id(1)?);
            let i = g.arrow_index(a).ok_or(Error::NotAnArrow(a))?;
            if values[i].is_some() {
                return Err(Error::Format(format!("arrow {a} listed twice")));
            }
            values[i] = Some(C64::new(num(2)?, num(3)?));
            if with_jets {
                for d in 0..n {
                    d_src[i * n + d] = C64::new(num(4 + 2 * d)?, num(5 + 2 * d)?);
                    d_dst[i * n + d] = C64::new(num(4 + 2 * n + 2 * d)?, num(5 + 2 * n + 2 * d)?);
                }
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::Format(format!("arrow {} missing", g.arrow_at(i)))))
            .collect::<Result<Vec<_>>>()?;
        if with_jets {
            Self::from_jets(g, values, d_src, d_dst)
        } else {
            Self::from_values(g, values)
        }
    }
}

fn coords_table(space: &DiffSpace) -> Vec<Vec<f64>> {
    space.points().iter().map(|p| p.coords.clone()).collect()
}

/// A function on the base points: complex value and optional gradient at
/// every point. Elements of the center `Z ≅ C^∞(M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseFunction {
    dimension: usize,
    coords: Vec<Vec<f64>>,
    values: Vec<C64>,
    /// `dimension` partials per point.
    gradients: Option<Vec<C64>>,
    expr: Option<Expr>,
    is_real: bool,
}

impl BaseFunction {
    pub fn from_expression(space: &DiffSpace, src: &str) -> Result<Self> {
        let e = Expr::parse(src, Symbols::Point { dim: space.dimension() })?;
        Self::from_expr(space, &e)
    }

    pub fn from_expr(space: &DiffSpace, e: &Expr) -> Result<Self> {
        let n = space.dimension();
        if let Some(slot) = e.max_slot() {
            if slot >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: slot + 1,
                });
            }
        }
        let partials: Vec<Expr> = (0..n).map(|i| e.diff(i)).collect();
        let mut values = Vec::with_capacity(space.len());
        let mut gradients = Vec::with_capacity(space.len() * n);
        for p in space.points() {
            values.push(C64::new(e.eval_finite(&p.coords)?, 0.0));
            for d in &partials {
                gradients.push(C64::new(d.eval_finite(&p.coords)?, 0.0));
            }
        }
        Ok(BaseFunction {
            dimension: n,
            coords: coords_table(space),
            values,
            gradients: Some(gradients),
            expr: Some(e.clone()),
            is_real: true,
        })
    }

    /// Tabulated values in space point order, with optional gradients
    /// (`dimension` entries per point).
    pub fn from_values(
        space: &DiffSpace,
        values: Vec<C64>,
        gradients: Option<Vec<C64>>,
    ) -> Result<Self> {
        let n = space.dimension();
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: values.len(),
            });
        }
        if let Some(g) = &gradients {
            if g.len() != space.len() * n {
                return Err(Error::DimensionMismatch {
                    expected: space.len() * n,
                    found: g.len(),
                });
            }
        }
        let is_real = values.iter().all(|v| v.im == 0.0);
        Ok(BaseFunction {
            dimension: n,
            coords: coords_table(space),
            values,
            gradients,
            expr: None,
            is_real,
        })
    }

    pub fn constant(space: &DiffSpace, c: f64) -> Self {
        let n = space.dimension();
        BaseFunction {
            dimension: n,
            coords: coords_table(space),
            values: vec![C64::new(c, 0.0); space.len()],
            gradients: Some(vec![C64::zero(); space.len() * n]),
            expr: Some(Expr::Const(c)),
            is_real: true,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn gradient(&self, point: usize) -> Option<&[C64]> {
        let n = self.dimension;
        self.gradients.as_ref().map(|g| &g[point * n..(point + 1) * n])
    }

    pub fn expr(&self) -> Option<&Expr> {
        self.expr.as_ref()
    }

    /// Pointwise product, gradients by the product rule.
    pub fn product(&self, other: &BaseFunction) -> Result<BaseFunction> {
        if self.values.len() != other.values.len() || self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        let n = self.dimension;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        let gradients = match (&self.gradients, &other.gradients) {
            (Some(ga), Some(gb)) => Some(
                (0..ga.len())
                    .map(|k| ga[k] * other.values[k / n.max(1)] + self.values[k / n.max(1)] * gb[k])
                    .collect(),
            ),
            _ => None,
        };
        let expr = match (&self.expr, &other.expr) {
            (Some(a), Some(b)) => Some(expr::mul(a.clone(), b.clone())),
            _ => None,
        };
        Ok(BaseFunction {
            dimension: n,
            coords: self.coords.clone(),
            values,
            gradients,
            expr,
            is_real: self.is_real && other.is_real,
        })
    }

    /// Coordinates of the base points, in space order.
    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    /// A function on the same points as `self`.
    pub(crate) fn sibling(
        &self,
        values: Vec<C64>,
        gradients: Option<Vec<C64>>,
        expr: Option<Expr>,
        is_real: bool,
    ) -> Self {
        BaseFunction {
            dimension: self.dimension,
            coords: self.coords.clone(),
            values,
            gradients,
            expr,
            is_real,
        }
    }
}
