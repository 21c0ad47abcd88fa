use microlp::{Problem, Solution};

use crate::error::{Error, Result};

/// Solves an LP to optimality, mapping solver outcomes onto crate errors.
pub(crate) fn solve(problem: &Problem) -> Result<Solution> {
    let outcome = problem.solve().map_err(|e| match e {
        microlp::Error::Infeasible => Error::LpInfeasible,
        other => Error::SolverFailure(other.to_string()),
    })?;
    outcome
        .into_solution()
        .map_err(|_| Error::SolverFailure("LP solve interrupted".into()))
}
