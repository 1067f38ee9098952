//! Tree-walking interpreter with deterministic resource bounds.
//!
//! Every statement execution and expression evaluation costs one step;
//! exceeding the step budget yields `STEP_LIMIT_EXCEEDED`. Call depth is
//! additionally capped (recursion is legal but bounded) and reported as the
//! same status, since unbounded recursion is just nontermination by other
//! means. All arithmetic wraps at 64-bit bounds.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::{BinaryOp, Expr, Program, Stmt, UnaryOp};
use super::corpus::{Expected, TestCase};

/// Default step budget for one test execution.
pub const DEFAULT_STEP_LIMIT: u64 = 100_000;

/// Hard cap on nested calls, independent of the step budget.
const CALL_DEPTH_LIMIT: usize = 256;

/// Outcome of running one test against one program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExecStatus {
    Pass,
    Fail,
    RuntimeError,
    StepLimitExceeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecOutcome {
    pub status: ExecStatus,
}

impl ExecOutcome {
    /// Runtime errors and step-limit exhaustion count as failures for kill
    /// purposes, matching how mutation tools treat crashes and timeouts.
    pub fn is_failure(&self) -> bool {
        self.status != ExecStatus::Pass
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
}

enum Halt {
    RuntimeError,
    StepLimit,
}

enum Flow {
    Normal,
    Return(i64),
}

struct Interp<'p> {
    program: &'p Program,
    steps_left: u64,
}

impl<'p> Interp<'p> {
    fn charge(&mut self) -> Result<(), Halt> {
        if self.steps_left == 0 {
            return Err(Halt::StepLimit);
        }
        self.steps_left -= 1;
        Ok(())
    }

    fn call(&mut self, name: &str, args: &[i64], depth: usize) -> Result<i64, Halt> {
        if depth >= CALL_DEPTH_LIMIT {
            return Err(Halt::StepLimit);
        }
        let func = match self.program.function(name) {
            Some(f) => f,
            None => return Err(Halt::RuntimeError),
        };
        if func.params.len() != args.len() {
            return Err(Halt::RuntimeError);
        }
        let mut env: HashMap<String, i64> = func
            .params
            .iter()
            .cloned()
            .zip(args.iter().copied())
            .collect();
        match self.exec_block(&func.body, &mut env, depth)? {
            Flow::Return(v) => Ok(v),
            // Falling off the end of a function is a runtime error; the
            // language has no implicit return value.
            Flow::Normal => Err(Halt::RuntimeError),
        }
    }

    fn exec_block(
        &mut self,
        stmts: &[Stmt],
        env: &mut HashMap<String, i64>,
        depth: usize,
    ) -> Result<Flow, Halt> {
        for s in stmts {
            match self.exec_stmt(s, env, depth)? {
                Flow::Normal => {}
                ret => return Ok(ret),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(
        &mut self,
        stmt: &Stmt,
        env: &mut HashMap<String, i64>,
        depth: usize,
    ) -> Result<Flow, Halt> {
        self.charge()?;
        match stmt {
            Stmt::Assign { name, value, .. } => {
                let v = self.eval(value, env, depth)?;
                env.insert(name.clone(), v);
                Ok(Flow::Normal)
            }
            Stmt::Return { value, .. } => {
                let v = self.eval(value, env, depth)?;
                Ok(Flow::Return(v))
            }
            Stmt::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                let c = self.eval(cond, env, depth)?;
                if c != 0 {
                    self.exec_block(then_block, env, depth)
                } else if let Some(els) = else_block {
                    self.exec_block(els, env, depth)
                } else {
                    Ok(Flow::Normal)
                }
            }
            Stmt::While { cond, body, .. } => {
                loop {
                    self.charge()?;
                    if self.eval(cond, env, depth)? == 0 {
                        return Ok(Flow::Normal);
                    }
                    match self.exec_block(body, env, depth)? {
                        Flow::Normal => {}
                        ret => return Ok(ret),
                    }
                }
            }
        }
    }

    fn eval(
        &mut self,
        expr: &Expr,
        env: &mut HashMap<String, i64>,
        depth: usize,
    ) -> Result<i64, Halt> {
        self.charge()?;
        match expr {
            Expr::Int { value, .. } => Ok(*value),
            Expr::Var { name, .. } => env.get(name).copied().ok_or(Halt::RuntimeError),
            Expr::Unary { op, operand, .. } => {
                let v = self.eval(operand, env, depth)?;
                Ok(match op {
                    UnaryOp::Neg => v.wrapping_neg(),
                    UnaryOp::Not => i64::from(v == 0),
                })
            }
            Expr::Binary {
                op, lhs, rhs, ..
            } => {
                // Logical operators short-circuit.
                if *op == BinaryOp::And {
                    let l = self.eval(lhs, env, depth)?;
                    if l == 0 {
                        return Ok(0);
                    }
                    return Ok(i64::from(self.eval(rhs, env, depth)? != 0));
                }
                if *op == BinaryOp::Or {
                    let l = self.eval(lhs, env, depth)?;
                    if l != 0 {
                        return Ok(1);
                    }
                    return Ok(i64::from(self.eval(rhs, env, depth)? != 0));
                }
                let l = self.eval(lhs, env, depth)?;
                let r = self.eval(rhs, env, depth)?;
                Ok(match op {
                    BinaryOp::Add => l.wrapping_add(r),
                    BinaryOp::Sub => l.wrapping_sub(r),
                    BinaryOp::Mul => l.wrapping_mul(r),
                    BinaryOp::Div => {
                        if r == 0 {
                            return Err(Halt::RuntimeError);
                        }
                        l.wrapping_div(r)
                    }
                    BinaryOp::Rem => {
                        if r == 0 {
                            return Err(Halt::RuntimeError);
                        }
                        l.wrapping_rem(r)
                    }
                    BinaryOp::Lt => i64::from(l < r),
                    BinaryOp::Le => i64::from(l <= r),
                    BinaryOp::Gt => i64::from(l > r),
                    BinaryOp::Ge => i64::from(l >= r),
                    BinaryOp::Eq => i64::from(l == r),
                    BinaryOp::Ne => i64::from(l != r),
                    BinaryOp::And | BinaryOp::Or => unreachable!("handled above"),
                })
            }
            Expr::Call { name, args, .. } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, env, depth)?);
                }
                self.call(name, &values, depth + 1)
            }
        }
    }
}

/// Evaluate `test.function(test.inputs)` and classify the outcome.
///
/// Deterministic: identical `(program, test, step_limit)` always yields the
/// same outcome. `EXPECT_ERROR` tests pass exactly when evaluation raises a
/// runtime error (step-limit exhaustion is reported separately).
pub fn run_test(
    program: &Program,
    test: &TestCase,
    step_limit: u64,
) -> Result<ExecOutcome, RunError> {
    assert!(step_limit > 0, "step_limit must be positive");
    if program.function(&test.function).is_none() {
        return Err(RunError::UnknownFunction(test.function.clone()));
    }
    let mut interp = Interp {
        program,
        steps_left: step_limit,
    };
    let status = match interp.call(&test.function, &test.inputs, 0) {
        Ok(value) => match test.expected {
            Expected::Value(want) if want == value => ExecStatus::Pass,
            _ => ExecStatus::Fail,
        },
        Err(Halt::RuntimeError) => match test.expected {
            Expected::Error => ExecStatus::Pass,
            _ => ExecStatus::RuntimeError,
        },
        Err(Halt::StepLimit) => ExecStatus::StepLimitExceeded,
    };
    Ok(ExecOutcome { status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;

    fn test_case(function: &str, inputs: &[i64], expected: Expected) -> TestCase {
        TestCase {
            id: "t".to_string(),
            function: function.to_string(),
            inputs: inputs.to_vec(),
            expected,
        }
    }

    fn status(src: &str, f: &str, inputs: &[i64], expected: Expected) -> ExecStatus {
        let p = parse(src).unwrap();
        run_test(&p, &test_case(f, inputs, expected), DEFAULT_STEP_LIMIT)
            .unwrap()
            .status
    }

    const GCD: &str = "fn gcd(a, b) {
        while (b != 0) {
            remainder = a % b;
            if (remainder < b) { a = b; b = remainder; } else { a = remainder; }
        }
        return a;
    }";

    #[test]
    fn gcd_12_8_passes() {
        assert_eq!(
            status(GCD, "gcd", &[12, 8], Expected::Value(4)),
            ExecStatus::Pass
        );
    }

    #[test]
    fn forced_nontermination_hits_step_limit() {
        let p = parse("fn f(a){while(1==1){}}").unwrap();
        let out = run_test(&p, &test_case("f", &[1], Expected::Value(0)), 1000).unwrap();
        assert_eq!(out.status, ExecStatus::StepLimitExceeded);
    }

    #[test]
    fn division_by_zero_is_runtime_error() {
        assert_eq!(
            status("fn f(a, b){return a / b;}", "f", &[1, 0], Expected::Value(0)),
            ExecStatus::RuntimeError
        );
    }

    #[test]
    fn expect_error_matches_runtime_error() {
        assert_eq!(
            status("fn f(a, b){return a / b;}", "f", &[1, 0], Expected::Error),
            ExecStatus::Pass
        );
        assert_eq!(
            status("fn f(a, b){return a / b;}", "f", &[4, 2], Expected::Error),
            ExecStatus::Fail
        );
    }

    #[test]
    fn unknown_function_is_an_error_not_an_outcome() {
        let p = parse("fn f(a){return a;}").unwrap();
        assert_eq!(
            run_test(&p, &test_case("g", &[1], Expected::Value(1)), 100),
            Err(RunError::UnknownFunction("g".to_string()))
        );
    }

    #[test]
    fn undefined_variable_is_runtime_error() {
        assert_eq!(
            status("fn f(a){return novar;}", "f", &[1], Expected::Value(0)),
            ExecStatus::RuntimeError
        );
    }

    #[test]
    fn missing_return_is_runtime_error() {
        assert_eq!(
            status("fn f(a){a = a + 1;}", "f", &[1], Expected::Value(2)),
            ExecStatus::RuntimeError
        );
    }

    #[test]
    fn wrapping_arithmetic() {
        assert_eq!(
            status(
                "fn f(a){return a + 1;}",
                "f",
                &[i64::MAX],
                Expected::Value(i64::MIN)
            ),
            ExecStatus::Pass
        );
    }

    #[test]
    fn recursion_works_within_depth_cap() {
        let src = "fn fact(n){ if (n <= 1) { return 1; } return n * fact(n - 1); }";
        assert_eq!(
            status(src, "fact", &[10], Expected::Value(3_628_800)),
            ExecStatus::Pass
        );
    }

    #[test]
    fn infinite_recursion_is_bounded() {
        let src = "fn f(n){ return f(n); }";
        assert_eq!(
            status(src, "f", &[1], Expected::Value(0)),
            ExecStatus::StepLimitExceeded
        );
    }

    #[test]
    fn short_circuit_skips_rhs_errors() {
        assert_eq!(
            status(
                "fn f(a){return a == 0 || 1 / a > 0;}",
                "f",
                &[0],
                Expected::Value(1)
            ),
            ExecStatus::Pass
        );
    }

    #[test]
    fn determinism_across_runs() {
        let p = parse(GCD).unwrap();
        let t = test_case("gcd", &[270, 192], Expected::Value(6));
        let first = run_test(&p, &t, DEFAULT_STEP_LIMIT).unwrap();
        for _ in 0..5 {
            assert_eq!(run_test(&p, &t, DEFAULT_STEP_LIMIT).unwrap(), first);
        }
    }
}
