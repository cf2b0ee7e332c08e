//! The five sums exactly as transcribed: index order, bounds, binomial
//! lists, signs and weights are kept as they appear in the source
//! expressions, including the entries that [`super::reconciled`] corrects.
//!
//! Naming: lower-case indices belong to Alice's stage, upper-case to Bob's;
//! a trailing prime marks the bra copy of an index.
//!
//! The X-basis sums are transcribed identically to their Z-basis
//! counterparts, so [`sum`] reuses the same builders for them.

use super::nested::{Base, DefinitionError, NestedSum, Stage, SumBuilder};
use super::SumId;

pub fn sum(id: SumId) -> Result<NestedSum, DefinitionError> {
    match id {
        SumId::Qnd => qnd(),
        SumId::CZ => coincidence(SumId::CZ),
        SumId::CX => coincidence(SumId::CX),
        SumId::NcZ => non_coincidence(SumId::NcZ),
        SumId::NcX => non_coincidence(SumId::NcX),
    }
}

fn binoms(b: &mut SumBuilder, list: &str) {
    for pair in list.split_whitespace() {
        let (n, k) = pair.split_once(',').expect("binomial entries are `n,k`");
        b.binom(n, k);
    }
}

fn qnd() -> Result<NestedSum, DefinitionError> {
    let mut b = SumBuilder::new("p_qnd/verbatim");
    b.index("i", "0", "1")
        .index("u", "0", "1")
        .index("x", "0", "i")
        .index("y", "0", "1-i")
        .index("s", "0", "x+u")
        .index("w", "max(0,s-u)", "min(s,x)")
        .index("w'", "max(0,s-u)", "min(s,x)")
        .index("t", "0", "1-u+y")
        .index("o", "max(0,t-(1-u))", "min(t,y)")
        .index("o'", "max(0,t-(1-u))", "min(t,y)");
    binoms(&mut b, "1,i 1,i 1,u 1,u i,x 1-i,y i,x 1-i,y y,o u,s-w 1-u,t-o x,w' y,o' u,s-w' x,w 1-u,t-o'");
    b.pow(Base::InvOnePlusR2, "2")
        .pow(Base::R, "2*i+2*u")
        .pow(Base::SqrtEtaCh, "2*x+2*y")
        .pow(Base::SqrtOneMinusEtaCh, "2-2*x-2*y")
        .pow(Base::InvSqrt2, "2+2*x+2*y")
        .pow(Base::MinusOne, "-w-o-w'-o'")
        .click(Stage::Qnd, "x+s+u")
        .click(Stage::Qnd, "1+y-t-u")
        .click(Stage::Qnd, "i")
        .pow(Base::OneMinusEta, "s+t+1-i");
    b.build()
}

fn coincidence(id: SumId) -> Result<NestedSum, DefinitionError> {
    let mut b = SumBuilder::new(alloc::format!("{id}/verbatim"));
    b.index("i", "0", "1")
        .index("u", "0", "1")
        .index("x", "0", "i")
        .index("y", "0", "1-i")
        .index("s", "0", "x+u")
        .index("w", "max(0,s-u)", "min(s,x)")
        .index("w'", "max(0,s-u)", "min(s,x)")
        .index("t", "0", "1-u+y")
        .index("I", "0", "1")
        .index("U", "0", "1")
        .index("X", "0", "I")
        .index("Y", "0", "1-I")
        .index("S", "0", "X+U")
        .index("W", "max(0,S-U)", "min(S,X)")
        .index("W'", "max(0,S-U)", "min(S,X)")
        .index("o", "max(0,t-1+u)", "min(t,y)")
        .index("T", "0", "1-U+Y")
        .index("O", "max(0,T-(1-U))", "min(T,Y)")
        .index("d", "0", "2")
        .index("O'", "max(0,T-(1-U))", "min(T,Y)")
        .index("a", "0", "d")
        .index("l'", "max(0,d-2+u)", "min(d,u)")
        .index("o'", "max(0,t-1+u)", "min(t,y)")
        .index("L'", "max(0,d-l'-2+u+U)", "min(d-l',U)")
        .index("A", "0", "2-d")
        .index("l", "max(0,d-2+u)", "min(d,u)")
        .index("L", "max(0,d-l-2+u+U)", "min(d-l,U)")
        .index("j", "max(0,a-d+l+L)", "min(a,l+L)")
        .index("q", "max(0,d-l-L-1+U)", "min(d-l-L,1-u)")
        .index("j'", "max(0,a-d+l'+L')", "min(a,l'+L')")
        .index("J'", "max(0,2-u-d+l'+L'-U)", "min(A,u-l'+U-L')")
        .index("q'", "max(0,d-l'-L'-1+U)", "min(d-l-L',1-u)")
        .index("J", "max(0,A-2+u+d-l-L+U)", "min(A,u-l+U-L)");
    binoms(
        &mut b,
        "1,i 1,i 1,u 1,u i,x 1-i,y i,x 1-i,y x,w y,o u,s-w 1-u,t-o x,w' y,o' 1,U u,s-w' 1-u,t-o' \
         1-u,q u,l 1,I 1,I 1-I,Y I,X 1-I,Y X,W Y,O U,S-W 1-U,T-O X,W' Y,O' U,S-W' 1-U,T-O' \
         1-u,q U,L 1-u,d-l-L-q U,L' u,l' 1-U,d-l'-L'-q' l+L,j d-l-L,a-j u,l u-l+U-L,J \
         2-u-d+l+L-U,A-J u-l'+U-L',J' 2-u-d+l'-U+L',A-J' d-l'-L',a-j' 1,U I,X l'+L',j' 1-u,q'",
    );
    b.pow(Base::InvOnePlusR2, "4")
        .pow(Base::R, "w*i+2*u+2*I+2*U")
        .pow(Base::SqrtEtaCh, "2*x+2*y+2*X+2*Y")
        .pow(Base::SqrtOneMinusEtaCh, "4-2*x-2*y-2*X-2*Y")
        .pow(Base::InvSqrt12, "12+2*x+2*y+2*X+2*Y")
        .pow(Base::MinusOne, "-w-o-w'-o'-W-O-W'-O'+l'+q'+j+l+q+J+j'+J'")
        .click(Stage::Qnd, "x+u-s")
        .click(Stage::Qnd, "X+U-S")
        .click(Stage::Qnd, "1+y-t-u")
        .click(Stage::Qnd, "i")
        .click(Stage::Qnd, "I")
        .click(Stage::Qnd, "1+Y-T-U")
        .click(Stage::Bsm, "a")
        .click(Stage::Bsm, "d-a")
        .pow(Base::OneMinusEtaPrime, "2-d")
        .pow(Base::OneMinusEta, "2+s+t-i+S+T-I");
    b.build()
}

fn non_coincidence(id: SumId) -> Result<NestedSum, DefinitionError> {
    let mut b = SumBuilder::new(alloc::format!("{id}/verbatim"));
    b.index("i", "0", "1")
        .index("u", "0", "1")
        .index("x", "0", "i")
        .index("y", "0", "1-i")
        .index("s", "0", "x+u")
        .index("w", "max(0,s-u)", "min(s,x)")
        .index("w'", "max(0,s-u)", "min(s,x)")
        .index("t", "0", "1-u+y")
        .index("o", "max(0,t-(1-u))", "min(t,y)")
        .index("o'", "max(0,t-(1-u))", "min(t,y)")
        .index("I", "0", "1")
        .index("U", "0", "1")
        .index("X", "0", "I")
        .index("Y", "0", "1-I")
        .index("S", "0", "X+U")
        .index("W", "max(0,S-U)", "min(S,X)")
        .index("W'", "max(0,S-U)", "min(S,X)")
        .index("T", "0", "1-U+Y")
        .index("d", "0", "2")
        .index("d'", "0", "2")
        .index("O", "max(0,T-(1-U))", "min(T,Y)")
        .index("O'", "max(0,T-(1-U))", "min(T,Y)")
        .index("l", "max(0,d-2+u)", "min(d,u)")
        .index("a", "0", "d")
        .index("a'", "0", "d'")
        .index("A", "0", "2-d")
        .index("A'", "0", "2-d'")
        .index("l'", "max(0,d'-2+u)", "min(d',u)")
        .index("L'", "max(0,d'-l'-2+u+U)", "min(d'-l',U)")
        .index("L", "max(0,d-l-2+u+U)", "min(d-l,U)")
        .index("q'", "max(0,d'-l'-L'-1+U)", "min(d'-l'-L',1-u)")
        .index("q", "max(0,d-l-L-1+U)", "min(d-l-L,1-u)")
        .index("j", "max(0,a-d+l+L)", "min(a,l+L)")
        .index("j'", "max(0,a'-d+l'+L')", "min(a',l'+L')")
        .index("J", "max(0,A-(2-u-(d-l-L)-U))", "min(A,u-l+U-L)")
        .index("J'", "max(0,2-u-(d'-l'-L')-U)", "min(A',u-l'+U-L')");
    binoms(
        &mut b,
        "1,i 1,i 1,u 1,u i,x 1-i,y i,x 1-i,y x,w y,o u,s-w 1-u,t-o x,w' y,o' u,s-w' 1-u,t-o' \
         1,I 1,I 1,U 1,U I,X 1-I,Y I,X 1-I,Y X,W Y,O U,S-W 1-U,T-O X,W' U,S-W' 1-U,T-O' \
         u,l 1-u,q 1-U,d-l-L-q U,L Y,O' U,L' u,l' 1-U,d'-l'-L'-q' 1-u,q' l+L,j u-l+U-L,J \
         2-u-d'+l'-U+L',A'-J' d-l-L,a-j d'-l'-L',a'-j' 2-u-d+l+L-U,A-J l'+L',j' u-l'+U-L',J'",
    );
    b.pow(Base::InvOnePlusR2, "4")
        .pow(Base::R, "2*i+2*u+2*I+2*U")
        .pow(Base::SqrtEtaCh, "2*x+2*y+2*X+2*Y")
        .pow(Base::SqrtOneMinusEtaCh, "4-2*x-2*y-2*X-2*Y")
        .pow(Base::InvSqrt12, "12+2*(x+y+X+Y)")
        .pow(Base::MinusOne, "-w-o-w'-o'-W-O-W'-d'+l'")
        .pow(Base::MinusOne, "q'-a+j-d+l+q-A+J-a'+j'-A'+J'")
        .click(Stage::Qnd, "x+u-s")
        .click(Stage::Qnd, "X+U-S")
        .click(Stage::Qnd, "1+y-t-u")
        .click(Stage::Qnd, "1+Y-T-U")
        .click(Stage::Qnd, "i")
        .click(Stage::Qnd, "I")
        .pow(Base::OneMinusEta, "2+s+t-i+S+T-I")
        .click(Stage::Bsm, "a")
        .click(Stage::Bsm, "A'")
        .pow(Base::OneMinusEtaPrime, "2-a-A'");
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_transcriptions_build() {
        for id in SumId::ALL {
            let s = sum(id).unwrap();
            assert!(!s.indices().is_empty(), "{id}");
        }
        assert_eq!(sum(SumId::Qnd).unwrap().indices().len(), 10);
        assert_eq!(sum(SumId::CZ).unwrap().indices().len(), 33);
        assert_eq!(sum(SumId::NcZ).unwrap().indices().len(), 36);
    }

    #[test]
    fn x_sums_share_the_z_transcription() {
        let (cz, cx) = (sum(SumId::CZ).unwrap(), sum(SumId::CX).unwrap());
        assert_eq!(cz.indices(), cx.indices());
        assert_eq!(cz.factors(), cx.factors());
        let (nz, nx) = (sum(SumId::NcZ).unwrap(), sum(SumId::NcX).unwrap());
        assert_eq!(nz.factors(), nx.factors());
    }
}
