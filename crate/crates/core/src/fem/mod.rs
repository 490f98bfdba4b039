//! P1 finite elements for the complex conductivity equation with shunt
//! electrodes.
//!
//! Every node on an electrode arc is condensed into one unknown per
//! electrode. The constant-potential kernel is removed by grounding the last
//! electrode during factorization; potentials are then shifted so that the
//! electrode potentials sum to zero.

pub mod lowrank;
pub mod ordering;
pub mod skyline;

use num_complex::Complex;
use rayon::prelude::*;

pub use lowrank::{ElementUpdate, LowRankUpdate};
pub use ordering::reverse_cuthill_mckee;
pub use skyline::SkylineLdlt;

use crate::error::{invalid, Error, Result};
use crate::geometry::Mesh;
use crate::scalar::{czero, Real};

/// Minimum admissible `Re(gamma)` per element.
pub const RE_GAMMA_FLOOR: f64 = 1e-12;

/// Gradients of the three P1 basis functions and the triangle area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry<T> {
    pub grads: [[T; 2]; 3],
    pub area: T,
}

impl<T: Real> ElementGeometry<T> {
    pub fn new(p: [[T; 2]; 3]) -> Self {
        let two_area =
            (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let grads = std::array::from_fn(|i| {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area]
        });
        ElementGeometry {
            grads,
            area: two_area * T::lit(0.5),
        }
    }

    /// `area * grad(phi_i) . grad(phi_j)`.
    pub fn local_stiffness(&self) -> [[T; 3]; 3] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                self.area
                    * (self.grads[i][0] * self.grads[j][0] + self.grads[i][1] * self.grads[j][1])
            })
        })
    }

    /// Constant gradient of the P1 interpolant with vertex values `u`.
    pub fn gradient(&self, u: [Complex<T>; 3]) -> [Complex<T>; 2] {
        let mut g = [czero(); 2];
        for i in 0..3 {
            g[0] += u[i] * self.grads[i][0];
            g[1] += u[i] * self.grads[i][1];
        }
        g
    }
}

pub fn element_geometry<T: Real>(mesh: &Mesh<T>) -> Vec<ElementGeometry<T>> {
    mesh.triangles()
        .iter()
        .map(|t| ElementGeometry::new([mesh.nodes()[t[0]], mesh.nodes()[t[1]], mesh.nodes()[t[2]]]))
        .collect()
}

/// Node to unknown mapping. Condensed indices: free nodes `0..n_free`,
/// electrode `l` at `n_free + l`. Reduced positions drop the grounded last
/// electrode and follow an RCM ordering of the free nodes.
#[derive(Debug, Clone)]
pub struct DofMap {
    node_dof: Vec<usize>,
    n_free: usize,
    electrodes: usize,
    position: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new<T: Real>(mesh: &Mesh<T>) -> Result<Self> {
        let m = mesh.electrode_count();
        if m < 2 {
            return invalid("at least two electrodes are required to fix the gauge");
        }
        let node_el = mesh.node_electrodes();
        let mut node_dof = vec![0; node_el.len()];
        let mut n_free = 0;
        for (v, e) in node_el.iter().enumerate() {
            if e.is_none() {
                node_dof[v] = n_free;
                n_free += 1;
            }
        }
        for (v, e) in node_el.iter().enumerate() {
            if let Some(l) = e {
                node_dof[v] = n_free + l;
            }
        }
        let mut adjacency = vec![Vec::new(); n_free];
        for t in mesh.triangles() {
            for a in 0..3 {
                for b in 0..3 {
                    let (i, j) = (node_dof[t[a]], node_dof[t[b]]);
                    if a != b && i < n_free && j < n_free {
                        adjacency[i].push(j);
                    }
                }
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        let order = reverse_cuthill_mckee(&adjacency);
        let mut position = vec![None; n_free + m];
        for (k, &v) in order.iter().enumerate() {
            position[v] = Some(k);
        }
        for l in 0..m - 1 {
            position[n_free + l] = Some(n_free + l);
        }
        Ok(DofMap {
            node_dof,
            n_free,
            electrodes: m,
            position,
        })
    }

    pub fn condensed_len(&self) -> usize {
        self.n_free + self.electrodes
    }

    pub fn reduced_len(&self) -> usize {
        self.n_free + self.electrodes - 1
    }

    pub fn free_count(&self) -> usize {
        self.n_free
    }

    pub fn node_dof(&self, node: usize) -> usize {
        self.node_dof[node]
    }

    pub fn electrode_dof(&self, l: usize) -> usize {
        self.n_free + l
    }

    /// Reduced position of a condensed index (`None` for the grounded electrode).
    pub fn position(&self, dof: usize) -> Option<usize> {
        self.position[dof]
    }
}

/// Ungauged condensed stiffness in row-compressed form.
#[derive(Debug, Clone)]
pub struct CondensedMatrix<T> {
    rows: Vec<Vec<(usize, Complex<T>)>>,
}

impl<T: Real> CondensedMatrix<T> {
    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(czero(), |acc, &(j, a)| acc + a * x[j]))
            .collect()
    }

    pub fn row(&self, i: usize) -> &[(usize, Complex<T>)] {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.rows[i]
            .iter()
            .find(|e| e.0 == j)
            .map_or(czero(), |e| e.1)
    }
}

/// Assembled and factorized shunt-electrode system for one admittivity.
#[derive(Debug, Clone)]
pub struct ShuntSystem<T> {
    dofs: DofMap,
    geometry: Vec<ElementGeometry<T>>,
    triangles: Vec<[usize; 3]>,
    stiffness: CondensedMatrix<T>,
    factor: SkylineLdlt<T>,
}

/// Potentials produced by one electrode current pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution<T> {
    /// Nodal potentials.
    pub u: Vec<Complex<T>>,
    /// One potential per electrode; these sum to zero.
    pub electrode_potentials: Vec<Complex<T>>,
    pub currents: Vec<Complex<T>>,
}

pub(crate) fn check_admittivity<T: Real>(mesh: &Mesh<T>, gamma_e: &[Complex<T>]) -> Result<()> {
    if gamma_e.len() != mesh.triangles().len() {
        return invalid(format!(
            "admittivity vector has {} entries, mesh has {} triangles",
            gamma_e.len(),
            mesh.triangles().len()
        ));
    }
    let floor = T::lit(RE_GAMMA_FLOOR);
    for (t, g) in gamma_e.iter().enumerate() {
        if !(g.re >= floor) || !g.im.is_finite() || !g.re.is_finite() {
            return invalid(format!(
                "element {t}: Re(gamma) = {} is below the positive floor",
                g.re
            ));
        }
    }
    Ok(())
}

/// Assembles `K_ij = sum_T gamma_T int_T grad(phi_i) . grad(phi_j)` on the
/// condensed unknowns and factorizes the grounded system.
pub fn assemble<T: Real>(mesh: &Mesh<T>, gamma_e: &[Complex<T>]) -> Result<ShuntSystem<T>> {
    check_admittivity(mesh, gamma_e)?;
    let dofs = DofMap::new(mesh)?;
    let geometry = element_geometry(mesh);

    let nc = dofs.condensed_len();
    let mut rows: Vec<Vec<(usize, Complex<T>)>> = vec![Vec::new(); nc];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = geometry[t].local_stiffness();
        for a in 0..3 {
            let i = dofs.node_dof(tri[a]);
            for b in 0..3 {
                rows[i].push((dofs.node_dof(tri[b]), gamma_e[t] * k[a][b]));
            }
        }
    }
    for row in &mut rows {
        row.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, Complex<T>)> = Vec::with_capacity(row.len());
        for &(j, v) in row.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        *row = merged;
    }
    let stiffness = CondensedMatrix { rows };

    let nr = dofs.reduced_len();
    let mut first: Vec<usize> = (0..nr).collect();
    for (i, row) in stiffness.rows.iter().enumerate() {
        let Some(pi) = dofs.position(i) else { continue };
        for &(j, _) in row {
            if let Some(pj) = dofs.position(j) {
                if pj < pi {
                    first[pi] = first[pi].min(pj);
                }
            }
        }
    }
    let mut sky = SkylineLdlt::with_envelope(first);
    for (i, row) in stiffness.rows.iter().enumerate() {
        let Some(pi) = dofs.position(i) else { continue };
        for &(j, v) in row {
            if let Some(pj) = dofs.position(j) {
                if pj <= pi {
                    sky.add(pi, pj, v);
                }
            }
        }
    }
    let factor = sky.factorize()?;
    Ok(ShuntSystem {
        dofs,
        geometry,
        triangles: mesh.triangles().to_vec(),
        stiffness,
        factor,
    })
}

fn zero_sum_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
}

impl<T: Real> ShuntSystem<T> {
    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn electrode_count(&self) -> usize {
        self.dofs.electrodes
    }

    pub fn geometry(&self) -> &[ElementGeometry<T>] {
        &self.geometry
    }

    pub fn stiffness(&self) -> &CondensedMatrix<T> {
        &self.stiffness
    }

    pub fn factor(&self) -> &SkylineLdlt<T> {
        &self.factor
    }

    pub(crate) fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    fn check_currents(&self, currents: &[Complex<T>]) -> Result<()> {
        if currents.len() != self.electrode_count() {
            return invalid(format!(
                "current vector has {} entries, mesh has {} electrodes",
                currents.len(),
                self.electrode_count()
            ));
        }
        let sum: Complex<T> = currents.iter().fold(czero(), |a, &b| a + b);
        let max = currents.iter().map(|c| c.norm()).fold(T::zero(), T::max);
        if sum.norm() > zero_sum_tolerance::<T>() * max {
            return Err(Error::NonZeroSumCurrent {
                sum: sum.norm().to_f64_lossy(),
                max: max.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Right-hand side in reduced positions for electrode currents.
    pub fn reduced_rhs(&self, currents: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_currents(currents)?;
        let mut rhs = vec![czero(); self.dofs.reduced_len()];
        for (l, &i) in currents.iter().enumerate() {
            if let Some(p) = self.dofs.position(self.dofs.electrode_dof(l)) {
                rhs[p] = i;
            }
        }
        Ok(rhs)
    }

    pub fn solve_reduced(&self, rhs: &[Complex<T>]) -> Vec<Complex<T>> {
        self.factor.solve(rhs)
    }

    /// Electrode potentials of a reduced solution vector, gauged to zero sum.
    pub fn electrode_potentials_of(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let m = self.electrode_count();
        let mut u: Vec<Complex<T>> = (0..m)
            .map(|l| {
                self.dofs
                    .position(self.dofs.electrode_dof(l))
                    .map_or(czero(), |p| x[p])
            })
            .collect();
        let mean = u.iter().fold(czero(), |a, &b| a + b) / T::lit(m as f64);
        for v in &mut u {
            *v -= mean;
        }
        u
    }

    /// Gauge shift applied to a reduced solution (minus the electrode mean).
    fn gauge_shift(&self, x: &[Complex<T>]) -> Complex<T> {
        let m = self.electrode_count();
        let sum = (0..m)
            .filter_map(|l| self.dofs.position(self.dofs.electrode_dof(l)))
            .fold(czero(), |a, p| a + x[p]);
        sum / T::lit(m as f64)
    }

    /// Condensed (ungauged) vector from a reduced solution, gauge applied.
    pub fn condensed_of(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let shift = self.gauge_shift(x);
        (0..self.dofs.condensed_len())
            .map(|d| self.dofs.position(d).map_or(czero(), |p| x[p]) - shift)
            .collect()
    }

    pub fn field_of(&self, x: &[Complex<T>], currents: &[Complex<T>]) -> FieldSolution<T> {
        let xc = self.condensed_of(x);
        let u = self.dofs.node_dof.iter().map(|&d| xc[d]).collect();
        let electrode_potentials = (0..self.electrode_count())
            .map(|l| xc[self.dofs.electrode_dof(l)])
            .collect();
        FieldSolution {
            u,
            electrode_potentials,
            currents: currents.to_vec(),
        }
    }

    /// Solves for the potential driven by electrode currents summing to zero.
    pub fn solve_drive(&self, currents: &[Complex<T>]) -> Result<FieldSolution<T>> {
        let rhs = self.reduced_rhs(currents)?;
        let x = self.solve_reduced(&rhs);
        Ok(self.field_of(&x, currents))
    }

    /// Electrode potentials only.
    pub fn solve_electrodes(&self, currents: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let rhs = self.reduced_rhs(currents)?;
        Ok(self.electrode_potentials_of(&self.solve_reduced(&rhs)))
    }

    /// Solves several drives, concurrently; output order follows input order.
    pub fn solve_many(&self, drives: &[Vec<Complex<T>>]) -> Result<Vec<FieldSolution<T>>> {
        drives.par_iter().map(|c| self.solve_drive(c)).collect()
    }

    /// Condensed vector of a field solution.
    pub fn condensed_field(&self, sol: &FieldSolution<T>) -> Vec<Complex<T>> {
        let mut xc = vec![czero(); self.dofs.condensed_len()];
        for (v, &d) in self.dofs.node_dof.iter().enumerate() {
            xc[d] = sol.u[v];
        }
        xc
    }

    /// Residual of the ungauged condensed system collected per electrode:
    /// the discrete current leaving through each electrode.
    pub fn electrode_currents(&self, sol: &FieldSolution<T>) -> Vec<Complex<T>> {
        let r = self.stiffness.apply(&self.condensed_field(sol));
        (0..self.electrode_count())
            .map(|l| r[self.dofs.electrode_dof(l)])
            .collect()
    }

    /// Largest residual on a free node (should vanish).
    pub fn free_residual(&self, sol: &FieldSolution<T>) -> T {
        let r = self.stiffness.apply(&self.condensed_field(sol));
        r[..self.dofs.n_free]
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }
}

/// `area * |grad u|^2` for every element.
pub fn element_energies<T: Real>(mesh: &Mesh<T>, u: &[Complex<T>]) -> Vec<T> {
    mesh.triangles()
        .iter()
        .map(|t| {
            let geo =
                ElementGeometry::new([mesh.nodes()[t[0]], mesh.nodes()[t[1]], mesh.nodes()[t[2]]]);
            let g = geo.gradient([u[t[0]], u[t[1]], u[t[2]]]);
            geo.area * (g[0].norm_sqr() + g[1].norm_sqr())
        })
        .collect()
}

/// `sum_{T in region} area(T) |grad u_T|^2`.
pub fn interior_energy<T: Real>(
    mesh: &Mesh<T>,
    solution: &FieldSolution<T>,
    region: &[usize],
) -> Result<T> {
    if solution.u.len() != mesh.nodes().len() {
        return invalid("solution was computed on a different mesh");
    }
    let nt = mesh.triangles().len();
    if let Some(&bad) = region.iter().find(|&&t| t >= nt) {
        return Err(Error::OutOfBounds(format!(
            "element {bad} (mesh has {nt} triangles)"
        )));
    }
    let energies = element_energies(mesh, &solution.u);
    Ok(region.iter().map(|&t| energies[t]).sum())
}

/// `sum_T w_T area(T) |grad u_T|^2`.
pub fn weighted_energy<T: Real>(mesh: &Mesh<T>, u: &[Complex<T>], weight: &[T]) -> T {
    element_energies(mesh, u)
        .iter()
        .zip(weight)
        .map(|(&e, &w)| e * w)
        .sum()
}

/// Dipole current vector: `+1` on `source`, `-1` on `sink`.
pub fn dipole<T: Real>(m: usize, source: usize, sink: usize) -> Vec<Complex<T>> {
    let mut c = vec![czero(); m];
    c[source] = Complex::new(T::one(), T::zero());
    c[sink] = Complex::new(-T::one(), T::zero());
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_disk_mesh, ElectrodeLayout};

    fn mesh(h: f64) -> Mesh<f64> {
        build_disk_mesh(10.0, &ElectrodeLayout::centered(16, 0.5), h).unwrap()
    }

    fn uniform(mesh: &Mesh<f64>, g: Complex<f64>) -> Vec<Complex<f64>> {
        vec![g; mesh.triangles().len()]
    }

    #[test]
    fn reference_element_stiffness() {
        // unit right triangle (0,0), (1,0), (0,1): the classic P1 matrix
        let geo = ElementGeometry::<f64>::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let k = geo.local_stiffness();
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
        // scaled and shifted triangle (1,1), (3,1), (1,2): hand-computed
        let geo = ElementGeometry::<f64>::new([[1.0, 1.0], [3.0, 1.0], [1.0, 2.0]]);
        let k = geo.local_stiffness();
        let want = [[1.25, -0.25, -1.0], [-0.25, 0.25, 0.0], [-1.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - want[i][j]).abs() < 1e-15, "{i}{j}: {}", k[i][j]);
            }
        }
    }

    #[test]
    fn ungauged_rows_sum_to_zero() {
        let m = mesh(1.0);
        let sys = assemble(&m, &uniform(&m, Complex::new(1.0, 0.0))).unwrap();
        let scale = sys.stiffness().get(0, 0).norm();
        for i in 0..sys.stiffness().len() {
            let s: Complex<f64> = sys.stiffness().row(i).iter().map(|e| e.1).sum();
            assert!(s.norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn assembly_is_linear_in_gamma() {
        let m = mesh(1.0);
        let g: Vec<Complex<f64>> = (0..m.triangles().len())
            .map(|t| Complex::new(1.0 + (t % 5) as f64, 0.3))
            .collect();
        let k = Complex::new(3.0, 0.0);
        let scaled: Vec<_> = g.iter().map(|&x| x * k).collect();
        let a = assemble(&m, &g).unwrap();
        let b = assemble(&m, &scaled).unwrap();
        for i in 0..a.stiffness().len() {
            for (&(j, x), &(j2, y)) in a.stiffness().row(i).iter().zip(b.stiffness().row(i)) {
                assert_eq!(j, j2);
                assert!((x * k - y).norm() <= 1e-14 * y.norm().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_nonpositive_conductivity() {
        let m = mesh(1.0);
        let mut g = uniform(&m, Complex::new(1.0, 0.0));
        g[3] = Complex::new(-1.0, 0.0);
        assert!(matches!(assemble(&m, &g), Err(Error::Invalid(_))));
    }

    #[test]
    fn zero_current_gives_zero_field() {
        let m = mesh(1.0);
        let sys = assemble(&m, &uniform(&m, Complex::new(1.0, 0.5))).unwrap();
        let sol = sys.solve_drive(&vec![Complex::new(0.0, 0.0); 16]).unwrap();
        assert!(sol.u.iter().all(|z| z.norm() == 0.0));
        assert!(sol.electrode_potentials.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn nonzero_sum_current_rejected() {
        let m = mesh(1.0);
        let sys = assemble(&m, &uniform(&m, Complex::new(1.0, 0.0))).unwrap();
        let mut c = dipole::<f64>(16, 0, 1);
        c[2] = Complex::new(1e-6, 0.0);
        assert!(matches!(
            sys.solve_drive(&c),
            Err(Error::NonZeroSumCurrent { .. })
        ));
    }

    #[test]
    fn solution_invariants_and_flux_balance() {
        let m = mesh(1.0);
        let g: Vec<Complex<f64>> = (0..m.triangles().len())
            .map(|t| Complex::new(1.0 + 0.5 * ((t % 3) as f64), 2.0))
            .collect();
        let sys = assemble(&m, &g).unwrap();
        let c = dipole::<f64>(16, 2, 9);
        let sol = sys.solve_drive(&c).unwrap();
        let sum: Complex<f64> = sol.electrode_potentials.iter().sum();
        assert!(sum.norm() < 1e-12);
        let node_el = m.node_electrodes();
        for (v, e) in node_el.iter().enumerate() {
            if let Some(l) = e {
                assert_eq!(sol.u[v], sol.electrode_potentials[*l]);
            }
        }
        for (got, want) in sys.electrode_currents(&sol).iter().zip(&c) {
            assert!((got - want).norm() < 1e-10, "{got} vs {want}");
        }
        assert!(sys.free_residual(&sol) < 1e-10);
    }

    #[test]
    fn interior_energy_checks() {
        let m = mesh(1.0);
        let sys = assemble(&m, &uniform(&m, Complex::new(1.0, 0.0))).unwrap();
        let sol = sys.solve_drive(&dipole::<f64>(16, 0, 1)).unwrap();
        let all: Vec<usize> = (0..m.triangles().len()).collect();
        let total = interior_energy(&m, &sol, &all).unwrap();
        let part = interior_energy(&m, &sol, &all[..all.len() / 2]).unwrap();
        assert!(total > part && part > 0.0);
        assert!(interior_energy(&m, &sol, &[all.len()]).is_err());
        let zero = sys.solve_drive(&vec![Complex::new(0.0, 0.0); 16]).unwrap();
        assert_eq!(interior_energy(&m, &zero, &all).unwrap(), 0.0);
    }
}
