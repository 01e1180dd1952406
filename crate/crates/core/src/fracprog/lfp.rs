use super::{dot, LfpError, LfpProblem, LfpSolution, Simplex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfpOptions {
    /// Successive vertices closer than this in every coordinate are equal.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LfpOptions {
    fn default() -> Self {
        LfpOptions {
            tolerance: 1e-9,
            max_iterations: 1000,
        }
    }
}

/// Component of the numerator direction orthogonal to the denominator
/// direction: `c − (⟨c,d⟩/⟨d,d⟩)·d`.
pub fn lfp_gamma(problem: &LfpProblem) -> Result<Vec<f64>, LfpError> {
    let dd = dot(&problem.den, &problem.den);
    if dd == 0.0 {
        return Err(LfpError::ZeroDenominatorDirection);
    }
    let scale = dot(&problem.num, &problem.den) / dd;
    Ok(problem
        .num
        .iter()
        .zip(&problem.den)
        .map(|(c, d)| c - scale * d)
        .collect())
}

pub fn lfp_solve(problem: &LfpProblem) -> Result<LfpSolution, LfpError> {
    lfp_solve_with(problem, &LfpOptions::default())
}

pub fn lfp_solve_with(problem: &LfpProblem, opts: &LfpOptions) -> Result<LfpSolution, LfpError> {
    problem.validate()?;
    let mut simplex = Simplex::new(&problem.as_lp(problem.num.clone()))?;

    let positive_den = |x: &[f64]| -> Result<f64, LfpError> {
        let value = problem.denominator(x);
        if value > 0.0 {
            Ok(value)
        } else {
            Err(LfpError::NonpositiveDenominator { value })
        }
    };

    let gamma = match lfp_gamma(problem) {
        Ok(g) => g,
        Err(LfpError::ZeroDenominatorDirection) => {
            // constant denominator: plain LP on the numerator
            let x = simplex.maximize(&problem.num)?;
            let den = positive_den(&x)?;
            let value = problem.numerator(&x) / den;
            return Ok(LfpSolution {
                x_opt: x.clone(),
                objective_value: value,
                iterations: 0,
                trace: vec![value],
                path: vec![x],
            });
        }
        Err(e) => return Err(e),
    };

    let c_norm = dot(&problem.num, &problem.num).sqrt();
    let g_norm = dot(&gamma, &gamma).sqrt();
    let mut current = if g_norm <= 1e-12 * c_norm.max(f64::MIN_POSITIVE) {
        // numerator parallel to denominator: start from the phase-I vertex
        simplex.vertex()
    } else {
        simplex.maximize(&gamma)?
    };

    positive_den(&current)?;
    let mut trace = vec![problem.value(&current)];
    let mut path = vec![current.clone()];
    let mut iterations = 0;

    loop {
        if iterations >= opts.max_iterations {
            return Err(LfpError::MaxIterationsExceeded(opts.max_iterations));
        }
        let level = problem.value(&current);
        let marginal: Vec<f64> = problem
            .num
            .iter()
            .zip(&problem.den)
            .map(|(c, d)| c - level * d)
            .collect();
        let next = simplex.maximize(&marginal)?;
        iterations += 1;
        positive_den(&next)?;
        trace.push(problem.value(&next));
        path.push(next.clone());

        let unchanged = current
            .iter()
            .zip(&next)
            .all(|(a, b)| (a - b).abs() <= opts.tolerance);
        current = next;
        if unchanged {
            break;
        }
    }

    Ok(LfpSolution {
        objective_value: problem.value(&current),
        x_opt: current,
        iterations,
        trace,
        path,
    })
}
