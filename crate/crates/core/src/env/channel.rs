//! User placement and large-scale channel gain.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::config::ChannelParams;

impl ChannelParams {
    /// Log-distance path loss in dB at `distance_m` (clamped to the minimum distance).
    pub fn pathloss_db(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(self.min_distance_m);
        self.pathloss_ref_db + 10.0 * self.pathloss_exponent * d.log10()
    }

    /// Linear large-scale gain from path loss and a shadowing offset in dB.
    pub fn large_scale_gain(&self, distance_m: f64, shadowing_db: f64) -> f64 {
        10f64.powf(-(self.pathloss_db(distance_m) + shadowing_db) / 10.0)
    }

    /// Distance of a point drawn uniformly over the disk.
    pub fn sample_distance<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (self.cell_radius_m * rng.gen::<f64>().sqrt()).max(self.min_distance_m)
    }

    pub fn sample_shadowing_db<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.shadowing_sigma_db * z
    }

    /// Unit-mean Rayleigh power gain for one slot, or 1 when fading is off.
    pub fn sample_fading<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g: f64 = Exp1.sample(rng);
        if self.rayleigh {
            g
        } else {
            1.0
        }
    }
}
