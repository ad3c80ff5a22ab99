use super::SolveError;
use crate::qubo::ProblemInstance;

/// Per period, drops the selected non-top-5 SKU with the largest demand
/// (lowest index on ties) until the period fits under capacity.
pub fn repair_capacity(bits: &[u8], instance: &ProblemInstance) -> Result<Vec<u8>, SolveError> {
    let n = instance.n_skus;
    let expected = instance.periods * n;
    if bits.len() != expected {
        return Err(SolveError::Length {
            expected,
            got: bits.len(),
        });
    }
    let d = &instance.sku.demand;
    let mut out = bits.to_vec();
    for (t, period) in out.chunks_mut(n.max(1)).enumerate() {
        let mut load: f64 = (0..n).filter(|&i| period[i] != 0).map(|i| d[i]).sum();
        let mut removable: Vec<usize> = (0..n).filter(|&i| period[i] != 0 && !instance.is_top5(i)).collect();
        removable.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
        let mut next = removable.into_iter();
        while load > instance.capacity {
            match next.next() {
                Some(i) => {
                    period[i] = 0;
                    load -= d[i];
                }
                None => {
                    let top5_demand = instance.top5().iter().filter(|&&i| period[i] != 0).map(|&i| d[i]).sum();
                    return Err(SolveError::Infeasible {
                        period: t,
                        top5_demand,
                        capacity: instance.capacity,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Top-5 demand alone must fit, or no repaired plan can contain the top-5 set.
pub(crate) fn check_top5_fits(instance: &ProblemInstance) -> Result<(), SolveError> {
    let top5_demand: f64 = instance.top5().iter().map(|&i| instance.sku.demand[i]).sum();
    if top5_demand > instance.capacity {
        return Err(SolveError::Infeasible {
            period: 0,
            top5_demand,
            capacity: instance.capacity,
        });
    }
    Ok(())
}
