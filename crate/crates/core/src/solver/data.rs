use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::DataSpec;
use super::state::FieldState;
use crate::error::{Error, Result};

/// Admissible box at time `t1` for amplitude `psi0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBox {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl RegionBox {
    pub fn at(t1: f64, psi0: f64) -> Result<Self> {
        let floor = (-t1).exp() * psi0;
        if !(psi0 > 0.0) || !(floor < psi0) {
            return Err(Error::InvalidInput(format!(
                "empty admissible box: e^(-T₁)ψ₀ = {floor} must be below ψ₀ = {psi0}"
            )));
        }
        Ok(Self { u_min: -psi0, u_max: -floor, v_min: floor, v_max: psi0 })
    }

    fn shrink(&self, margin: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&margin) {
            return Err(Error::InvalidInput(format!("margin {margin} must lie in [0, 0.5)")));
        }
        let du = margin * (self.u_max - self.u_min);
        let dv = margin * (self.v_max - self.v_min);
        Ok(Self {
            u_min: self.u_min + du,
            u_max: self.u_max - du,
            v_min: self.v_min + dv,
            v_max: self.v_max - dv,
        })
    }

    pub fn contains_strictly(&self, u: f64, v: f64) -> bool {
        u > self.u_min && u < self.u_max && v > self.v_min && v < self.v_max
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        // Open interval: draw from the interior, never the faces.
        let mut draw = |a: f64, b: f64| loop {
            let x = rng.gen_range(a..b);
            if x > a {
                break x;
            }
        };
        (draw(self.u_min, self.u_max), draw(self.v_min, self.v_max))
    }
}

/// Initial `(u, v)` on `cells` points of `[0, 2π)` at time `t1`.
///
/// Piecewise data are defined on `[0, 2π)` independently of the grid, so
/// the same seed gives the same function at every resolution.
pub fn generate_rough_data(spec: &DataSpec, cells: usize, t1: f64, psi0: f64, seed: u64) -> Result<FieldState> {
    let region = RegionBox::at(t1, psi0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..cells).map(|j| j as f64 * TAU / cells as f64).collect();
    let (u, v): (Vec<f64>, Vec<f64>) = match spec {
        DataSpec::Constant { u, v } => {
            if !region.contains_strictly(*u, *v) {
                return Err(Error::InvalidInput(format!("constant data ({u}, {v}) outside the admissible box")));
            }
            (vec![*u; cells], vec![*v; cells])
        }
        DataSpec::TwoStep { margin } => {
            let b = region.shrink(*margin)?;
            let mut cuts = [rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)];
            cuts.sort_by(f64::total_cmp);
            let inner = b.sample(&mut rng);
            let outer = b.sample(&mut rng);
            xs.iter().map(|&x| if x >= cuts[0] && x < cuts[1] { inner } else { outer }).unzip()
        }
        DataSpec::RandomSteps { pieces, margin } => {
            if *pieces == 0 {
                return Err(Error::InvalidInput("RandomSteps needs at least one piece".into()));
            }
            let b = region.shrink(*margin)?;
            let values: Vec<(f64, f64)> = (0..*pieces).map(|_| b.sample(&mut rng)).collect();
            xs.iter()
                .map(|&x| values[((x / TAU * *pieces as f64) as usize).min(pieces - 1)])
                .unzip()
        }
        DataSpec::RandomCells { margin } => {
            let b = region.shrink(*margin)?;
            (0..cells).map(|_| b.sample(&mut rng)).unzip()
        }
        DataSpec::Smooth { amplitude } => {
            if !(0.0..1.0).contains(amplitude) {
                return Err(Error::InvalidInput(format!("smooth amplitude {amplitude} must lie in [0, 1)")));
            }
            let uc = 0.5 * (region.u_min + region.u_max);
            let uw = 0.5 * (region.u_max - region.u_min);
            let vc = 0.5 * (region.v_min + region.v_max);
            let vw = 0.5 * (region.v_max - region.v_min);
            xs.iter()
                .map(|&x| (uc + amplitude * uw * x.sin(), vc + amplitude * vw * (2.0 * x).cos()))
                .unzip()
        }
    };
    Ok(FieldState::uv(t1, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_data_is_in_region() {
        let psi0 = 0.1;
        let s = generate_rough_data(&DataSpec::Constant { u: -psi0 / 2.0, v: psi0 / 2.0 }, 16, 3.0, psi0, 0).unwrap();
        let (u, v) = s.pair();
        assert!(u.iter().all(|&x| x == -0.05) && v.iter().all(|&x| x == 0.05));
        assert!(generate_rough_data(&DataSpec::Constant { u: -0.2, v: 0.05 }, 16, 3.0, psi0, 0).is_err());
    }

    #[test]
    fn seeded_data_is_deterministic() {
        let spec = DataSpec::TwoStep { margin: 0.1 };
        let a = generate_rough_data(&spec, 128, 10.0, 0.1, 42).unwrap();
        let b = generate_rough_data(&spec, 128, 10.0, 0.1, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_rough_data(&spec, 128, 10.0, 0.1, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_data_stays_strictly_inside() {
        let psi0 = 0.1;
        let t1 = 12.0;
        let region = RegionBox::at(t1, psi0).unwrap();
        for seed in 0..100 {
            for spec in [
                DataSpec::RandomSteps { pieces: 8, margin: 0.0 },
                DataSpec::RandomCells { margin: 0.0 },
                DataSpec::TwoStep { margin: 0.1 },
            ] {
                let s = generate_rough_data(&spec, 64, t1, psi0, seed).unwrap();
                let (u, v) = s.pair();
                assert!(u.iter().zip(v).all(|(&u, &v)| region.contains_strictly(u, v)), "seed {seed}");
            }
        }
    }

    #[test]
    fn steps_are_resolution_independent() {
        let spec = DataSpec::RandomSteps { pieces: 8, margin: 0.1 };
        let coarse = generate_rough_data(&spec, 64, 5.0, 0.1, 7).unwrap();
        let fine = generate_rough_data(&spec, 128, 5.0, 0.1, 7).unwrap();
        let (uc, _) = coarse.pair();
        let (uf, _) = fine.pair();
        for j in 0..64 {
            assert_eq!(uc[j], uf[2 * j]);
        }
    }

    #[test]
    fn empty_box_is_rejected() {
        assert!(RegionBox::at(0.0, 0.1).is_err());
        assert!(RegionBox::at(-1.0, 0.1).is_err());
    }
}
