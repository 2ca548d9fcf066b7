use std::cmp::Ordering;

/// `a` dominates `b` (all-minimize): no worse anywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Indices of the nondominated points, ascending. Exact duplicates do not
/// dominate each other, so all copies of a front point are kept.
///
/// Any dominator of `p` sorts lexicographically before `p`, and dominance is
/// transitive, so checking `p` against the front kept so far is enough.
pub fn pareto_filter<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| lex_cmp(points[i].as_ref(), points[j].as_ref()).then(i.cmp(&j)));
    let mut front: Vec<usize> = Vec::new();
    for &i in &order {
        let p = points[i].as_ref();
        if !front.iter().any(|&j| dominates(points[j].as_ref(), p)) {
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        assert_eq!(pareto_filter(&[[1.0, 1.0], [2.0, 2.0]]), vec![0]);
        assert_eq!(pareto_filter(&[[1.0, 2.0], [2.0, 1.0]]), vec![0, 1]);
        assert_eq!(pareto_filter(&[[1.0, 1.0], [1.0, 1.0]]), vec![0, 1]);
        assert_eq!(pareto_filter::<[f64; 2]>(&[]), Vec::<usize>::new());
        assert_eq!(pareto_filter(&[[1.0, 2.0], [1.0, 1.0]]), vec![1]);
    }
}
