use percal::camera::{horizon_edge_intersections_for_aspect, CameraCalibration, HorizonFeature};
use percal::retrieval::{Match, RetrievalIndex};
use percal::sampling::seeded_rng;
use rand::Rng;

fn random_index(n: usize, seed: u64) -> (RetrievalIndex, Vec<(String, CameraCalibration, f64)>) {
    let mut rng = seeded_rng(seed);
    let items: Vec<_> = (0..n)
        .map(|i| {
            let c = CameraCalibration::new(
                rng.random_range(0.2..1.8),
                rng.random_range(-1.5..1.5),
                rng.random_range(-0.5..0.5),
            )
            .unwrap();
            (format!("img{i:05}"), c, [1.0, 4.0 / 3.0, 16.0 / 9.0][i % 3])
        })
        .collect();
    (RetrievalIndex::build(items.clone()).unwrap(), items)
}

fn brute_force(
    items: &[(String, CameraCalibration, f64)],
    q: &HorizonFeature,
    k: usize,
) -> Vec<Match> {
    let mut all: Vec<Match> = items
        .iter()
        .map(|(id, c, a)| Match {
            image_id: id.clone(),
            distance: horizon_edge_intersections_for_aspect(c, *a)
                .unwrap()
                .distance(q),
        })
        .collect();
    all.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.image_id.cmp(&b.image_id))
    });
    all.truncate(k);
    all
}

#[test]
fn index_matches_brute_force() {
    let (index, items) = random_index(2000, 3);
    let mut rng = seeded_rng(4);
    for _ in 0..100 {
        let q = HorizonFeature {
            y_left: rng.random_range(-2.0..2.0),
            y_right: rng.random_range(-2.0..2.0),
        };
        let k = rng.random_range(1..20);
        assert_eq!(index.query(&q, k).unwrap(), brute_force(&items, &q, k));
    }
}

#[test]
fn self_query_ranks_first() {
    let (index, _) = random_index(300, 5);
    for e in index.entries() {
        let top = index.query(&e.feature(), 1).unwrap();
        assert_eq!(top[0].image_id, e.image_id);
        assert_eq!(top[0].distance, 0.0);
    }
}

#[test]
fn order_and_size_preserved() {
    let (index, items) = random_index(50, 6);
    assert_eq!(index.len(), 50);
    for (e, (id, c, a)) in index.entries().iter().zip(&items) {
        assert_eq!(&e.image_id, id);
        assert_eq!(
            e.feature(),
            horizon_edge_intersections_for_aspect(c, *a).unwrap()
        );
    }
    let q = index.entries()[0].feature();
    assert_eq!(index.query(&q, 1000).unwrap().len(), 50);
}
