//! Fixtures shared by the kernel benchmarks: the reference collapse problem
//! at a chosen resolution, with a state and signal one step in.

use fbchemo::analytic::exact_rhs;
use fbchemo::elliptic::{restrict_to_fixed_grid, solve_v, SourceField};
use fbchemo::grid::RadialGrid;
use fbchemo::parabolic::{Parabolic, StepContext};
use fbchemo::{KLaw, Params, Profile, TimeStep, UState, VState};

pub struct Fixture {
    pub params: Params,
    pub stepper: Parabolic,
    pub state: UState,
    pub source: SourceField,
    pub signal: VState,
    pub h_dot: f64,
}

/// `n = 3`, `a = 1`, `b = 0.5`, `M = 1` on `cells` intervals.
pub fn collapse(cells: usize) -> Fixture {
    let params = Params {
        n: 3,
        b: 0.5,
        k_law: KLaw::Linear { a: 1.0 },
        u0: Profile::Constant { level: 24.0 },
        grid_n: cells,
        dt: TimeStep::Fixed(1e-6),
        ..Params::default()
    }
    .validate()
    .expect("reference parameters are valid");
    let mass = params.initial_mass().mass;
    let stepper = Parabolic::new(&params);
    let state = UState::initial(&params, &RadialGrid::new(params.n, cells), mass);
    let source = restrict_to_fixed_grid(&state, cells, params.n, params.n as f64 * mass);
    let signal = solve_v(&source, params.tol_elliptic).expect("initial signal");
    let h_dot = exact_rhs(params.b, 1.0, params.n, mass);
    Fixture {
        params,
        stepper,
        state,
        source,
        signal,
        h_dot,
    }
}

impl Fixture {
    pub fn context(&self) -> StepContext<'_> {
        let dt = self.params.dt_value();
        StepContext {
            h: self.state.h,
            h_next: self.state.h + dt * self.h_dot,
            h_dot: self.h_dot,
            signal: &self.signal,
            k_boundary: self.params.k_law.eval(self.state.h, 0.0),
            dt,
        }
    }
}
