//! Uniform radial node grid on [0, 1] with finite-volume bookkeeping.
//!
//! Node `j` sits at `j / cells`; its control volume is the dual cell
//! `[y_{j-1/2}, y_{j+1/2}] ∩ [0, 1]` and carries the exact radial moment
//! `∫ y^{n-1} dy` over that cell. Faces sit at half-indices.

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: u32,
    cells: usize,
    nodes: Vec<f64>,
    volumes: Vec<f64>,
    faces: Vec<f64>,
    face_areas: Vec<f64>,
}

impl RadialGrid {
    pub fn new(dim: u32, cells: usize) -> Self {
        assert!(cells >= 2, "radial grid needs at least two cells");
        let dy = 1.0 / cells as f64;
        let nf = dim as f64;
        let nodes: Vec<f64> = (0..=cells).map(|j| j as f64 * dy).collect();
        // interior faces j + 1/2, j = 0..cells-1
        let faces: Vec<f64> = (0..cells).map(|j| (j as f64 + 0.5) * dy).collect();
        let face_areas: Vec<f64> = faces.iter().map(|&y| y.powi(dim as i32 - 1)).collect();
        let moment = |y: f64| y.powi(dim as i32) / nf;
        let mut volumes = Vec::with_capacity(cells + 1);
        volumes.push(moment(faces[0]));
        for j in 1..cells {
            volumes.push(moment(faces[j]) - moment(faces[j - 1]));
        }
        volumes.push(moment(1.0) - moment(faces[cells - 1]));
        Self {
            dim,
            cells,
            nodes,
            volumes,
            faces,
            face_areas,
        }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Exact moments `∫ y^{n-1}` over each dual cell; they sum to `1/n`.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// `Σ V_j f_j`, the discrete `∫_0^1 y^{n-1} f dy`.
    pub fn moment(&self, f: &[f64]) -> f64 {
        self.volumes.iter().zip(f).map(|(v, f)| v * f).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes_sum_to_ball_moment() {
        for dim in 2..=5 {
            let g = RadialGrid::new(dim, 37);
            let s: f64 = g.volumes().iter().sum();
            assert!((s - 1.0 / dim as f64).abs() < 1e-15);
            assert_eq!(g.nodes().len(), 38);
            assert_eq!(g.faces().len(), 37);
        }
    }
}
