#!/usr/bin/env python3
"""Generate the bundled English word list from a curated stem set.

Expands each stem with regular morphological forms (plural, -ed, -ing,
-er, -ly, ...) using simple orthographic rules, dedupes, filters to
lowercase a-z words of length 2..10, and writes one word per line.
"""

import sys

STEMS = """
able about above accept access account achieve acid across act action active
actor add address admit adopt adult advance advice affect afford after again
age agent agree ahead aid aim air alarm album alert alien align alive all
allow almost alone along aloud alpha also alter always amber amount anchor
ancient anger angle animal ankle annual answer ant any apart apple apply april
area argue arise arm army around array arrive arrow art article ask asset
assign assist assume atom attach attack attend august aunt author auto autumn
avoid awake award aware away awful axis baby back bacon bad badge bag bake
balance bald ball band bank bar bare bargain bark barn base basic basin basket
bat batch bath battle bay beach beam bean bear beard beast beat beauty become
bed bee beef been beer before begin behave behind being bell belong below belt
bench bend benefit berry beside best bet better between beyond bid big bike
bill bind bird birth bit bite bitter black blade blame blank blast blaze bleed
blend bless blind block blood bloom blow blue blunt board boast boat body boil
bold bolt bomb bond bone bonus book boost boot border bore borrow boss both
bottle bottom bounce bound bow bowl box boy brain brake branch brand brave
bread break breath breed breeze brick bridge brief bright bring broad bronze
brook broom brother brown brush bubble bucket budget bug build bulb bulk bull
bundle burden burn burst bury bus bush busy but butter button buy cabin cable
cage cake call calm camel camera camp can canal candle candy cap capable cape
captain car carbon card care cargo carpet carrot carry cart carve case cash
cast castle cat catch cattle cause cave cease cell cement census cent center
chain chair chalk chance change chaos chapter charge charm chart chase cheap
check cheek cheer cheese chest chew chicken chief child chill chin chip choice
choose chop chorus chrome chunk circle cite city civil claim clap class
claw clay clean clear clerk clever click client cliff climb clinic clip clock
close cloth cloud clown club clue cluster coach coal coast coat code coffee
coin cold collar collect college color column combine come comfort comic
command comment common company compare compete complex concert conduct confirm
connect consider consist contact contain content contest context control
convert cook cool copper copy coral cord core corn corner correct cost cotton
couch could council count country couple courage course court cousin cover
cow crack craft crane crash crawl crazy cream create credit creek crew cricket
crime crisp critic crop cross crowd crown crucial cruel cruise crumb crunch
crush cry crystal cube culture cup curb cure curl current curve custom cut
cute cycle daily dairy damage dance danger dare dark dash data date dawn day
dead deal dear debate debt decade decide deck declare deep deer defeat defend
define degree delay deliver demand dense deny depart depend deposit depth
derive desert design desk detail detect device devote dial diamond diary dice
diet differ dig digit dim dinner direct dirt discuss dish dismiss display
distance dive divide dizzy dock doctor dog dollar domain donate donkey door
dot double doubt dough dove down dozen draft drag dragon drain drama draw
dream dress drift drill drink drive drop drum dry duck due dull dumb dune
during dust duty dwarf each eager eagle ear early earn earth ease east easy
eat echo edge edit effect effort egg eight either elbow elder electric element
elite else embark embrace emerge employ empty enable end endless endorse
enemy energy engage engine enjoy enough enrich ensure enter entire entry
envelope equal equip era erase error erupt escape essay estate eternal ethics
even evening event ever every evidence evil evolve exact exam example exceed
excess exchange excite excuse execute exercise exhaust exhibit exile exist
exit expand expect expert explain explore export express extend extra eye
fabric face fact factor fade fail faint fair faith fall false fame family
famous fan fancy far farm fashion fast fat fault favor feast feature fee feed
feel fence fest fetch fever few fiber fiction field fierce fifteen fifty fig
fight figure file fill film filter final find fine finger finish fire firm
first fiscal fish fit fitness fix flag flame flash flat flavor flee flesh
flight flip float flock flood floor flour flow flower fluid flush fly foam
focus fog fold follow food foot force forest forget fork form fort fortune
forum forward fossil foster found fox frame free fresh friend fringe frog
front frost frown fruit fuel full fun fund funny fur future gadget gain galaxy
gallery game gap garage garden garlic gas gate gather gauge gaze gear gender
gene general genius gentle genuine gesture get ghost giant gift giggle ginger
girl give glad glance glass glide global globe glory glove glow glue goal
goat gold golf good goose gorilla gospel gossip govern gown grab grace grade
grain grand grant grape grasp grass grave gravity gray great green greet grid
grief grill grin grip grit grocery ground group grow guard guess guest guide
guilt guitar gun gym habit hair half hall hammer hand handle hang happen happy
harbor hard harm harsh harvest hat hatch hate have hawk hazard head heal
health heap hear heart heat heavy hedge height hello helmet help hen herb
here hero hidden hide high hill hint hip hire history hit hobby hockey hold
hole hollow holy home honest honey hood hook hope horn horror horse hospital
host hotel hour house hover how huge human humble humor hundred hungry hunt
hurdle hurry hurt hybrid ice icon idea identify idle ignore ill image imitate
immense immune impact import improve impulse inch include income increase
indeed index indicate indoor infant inform inherit initial inject injury inner
input inquiry insect inside insist inspire install intact intend interest into
invest invite involve iron island issue item ivory jacket jaguar jar jazz
jealous jeans jelly jewel job join joke journey joy judge juice jump jungle
junior junk just keen keep kettle key kick kid kidney kind kingdom kiss kit
kitchen kite kitten knee knife knock know lab label labor ladder lady lake
lamp land language lap large last late laugh launch lava law lawn lawsuit
layer lazy lead leaf league lean learn leave lecture left leg legal legend
leisure lemon lend length lens leopard less lesson letter level liar liberty
library license lid life lift light like limb limit line link lion liquid
list listen little live lizard load loan lobby local lock lodge logic lonely
long look loop loose lord lose loss lot loud lounge love low loyal lucky
lumber lunar lunch luxury machine mad magic magnet maid mail main major make
mammal man manage mango mansion manual map maple marble march margin marine
market marry mask mass master match material math matrix matter maximum may
maze meadow mean measure meat mechanic medal media melody melt member memory
mention menu mercy merge merit merry mesh message metal method middle midnight
might mild mile milk mill mind mineral minimum minor minute miracle mirror
misery miss mistake mix mixture mobile model modify moment monitor monkey
monster month moon moral more morning mosquito mother motion motor mountain
mouse mouth move movie much muffin mule multiply muscle museum mushroom music
must mutual myself mystery myth naive name napkin narrow nasty nation nature
near neck need needle negative neglect neither nephew nerve nest net network
neutral never new news next nice night noble noise nominee noodle normal
north nose notable note nothing notice novel now nuclear number nurse nut
oak obey object oblige obscure observe obtain obvious occur ocean october
odor off offer office often oil okay old olive omit once one onion online
only open opera opinion oppose option orange orbit orchard order ordinary
organ orient original orphan other our out outdoor outer output outside oval
oven over own owner oxygen oyster ozone pact paddle page pair palace palm
panda panel panic panther paper parade parent park parrot part party pass
patch path patient patrol pattern pause pave payment peace peach peanut pear
pen penalty pencil people pepper perfect permit person pet phone photo phrase
physical piano pick picnic picture piece pig pigeon pill pilot pink pioneer
pipe pistol pitch pizza place planet plastic plate play please pledge pluck
plug plunge poem poet point polar pole police pond pony pool popular portion
position possible post potato pottery poverty powder power practice praise
predict prefer prepare present pretty prevent price pride primary print
priority prison private prize problem process produce profit program project
promote proof property prosper protect proud provide public pudding pull
pulp pulse pumpkin punch pupil puppy purchase purity purpose purse push put
puzzle pyramid quality quantum quarter question quick quit quiz quote rabbit
raccoon race rack radar radio rail rain raise rally ramp ranch random range
rapid rare rate rather raven raw razor ready real reason rebel rebuild recall
receive recipe record recycle reduce reflect reform refuse region regret
regular reject relax release relief rely remain remember remind remove render
renew rent reopen repair repeat replace report require rescue resemble resist
resource response result retire retreat return reunion reveal review reward
rhythm rib ribbon rice rich ride ridge rifle right rigid ring riot ripple
rise risk ritual rival river road roast robot robust rocket romance roof
rookie room rose rotate rough round route royal rubber rude rug rule run
runway rural sad saddle sadness safe sail salad salmon salon salt salute same
sample sand satisfy sauce sausage save say scale scan scare scatter scene
scheme school science scissors scorpion scout scrap screen script scrub sea
search season seat second secret section security seed seek segment select
sell seminar senior sense sentence series service session settle setup seven
shadow shaft shallow share shed shell sheriff shield shift shine ship shiver
shock shoe shoot shop short shoulder shove shrimp shrug shuffle shy sibling
sick side siege sight sign silent silk silly silver similar simple since sing
siren sister sit six size sketch ski skill skin skirt skull slab slam sleep
slender slice slide slight slim slogan slot slow slush small smart smile
smoke smooth snack snake snap sniff snow soap soccer social sock soda soft
solar soldier solid solution solve someone song soon sorry sort soul sound
soup source south space spare spatial spawn speak special speed spell spend
sphere spice spider spike spin spirit split spoil sponsor spoon sport spot
spray spread spring spy square squeeze squirrel stable stadium staff stage
stairs stamp stand start state stay steak steel stem step stereo stick still
sting stock stomach stone stool story stove strategy street strike strong
struggle student stuff stumble style subject submit subway success such sudden
suffer sugar suggest suit summer sun sunny sunset super supply supreme sure
surface surge surprise surround survey suspect sustain swallow swamp swap
swarm swear sweet swift swim swing switch sword symbol symptom syrup system
table tackle tag tail talent talk tank tape target task taste tattoo taxi
teach team tell ten tenant tennis tent term test text thank that theme then
theory there they thing this thought three thrive throw thumb thunder ticket
tide tiger tilt timber time tiny tip tired tissue title toast tobacco today
toddler toe together toilet token tomato tomorrow tone tongue tonight tool
tooth top topic topple torch tornado tortoise toss total tourist toward tower
town toy track trade traffic tragic train transfer trap travel tray treat
tree trend trial tribe trick trigger trim trip trophy trouble truck true
truly trumpet trust truth try tube tuition tumble tuna tunnel turkey turn
turtle twelve twenty twice twin twist two type typical ugly umbrella unable
uncle uncover under undo unfair unfold unhappy uniform unique unit universe
unknown unlock until unusual unveil update upgrade uphold upon upper upset
urban urge usage use used useful useless usual utility vacant vacuum vague
valid valley value valve van vanish vapor various vast vault vehicle velvet
vendor venture venue verb verify version very vessel veteran viable vibrant
vicious victory video view village vintage violin virtual virus visa visit
visual vital vivid vocal voice void volcano volume vote voyage wage wagon
wait walk wall walnut want warfare warm warrior wash wasp waste water wave
way wealth weapon wear weasel weather web wedding weekend weird welcome west
wet whale what wheat wheel when where whip whisper wide width wife wild will
win window wine wing wink winner winter wire wisdom wise wish witness wolf
woman wonder wood wool word work world worry worth wrap wreck wrestle wrist
write wrong yard year yellow yes yield you young youth zebra zero zone zoo
""".split()

VOWELS = set("aeiou")


def forms(stem: str):
    out = {stem}
    if not stem.isalpha() or not stem.islower():
        return set()
    last = stem[-1]
    # plural / 3rd person
    if last in "szx" or stem.endswith(("ch", "sh")):
        out.add(stem + "es")
    elif last == "y" and len(stem) > 2 and stem[-2] not in VOWELS:
        out.add(stem[:-1] + "ies")
    else:
        out.add(stem + "s")
    # -ing / -ed for plausible verb shapes (heuristic: short stems)
    if len(stem) <= 6:
        if last == "e" and stem[-2:] != "ee":
            out.add(stem[:-1] + "ing")
            out.add(stem + "d")
        elif last == "y":
            out.add(stem + "ing")
            if len(stem) > 2 and stem[-2] not in VOWELS:
                out.add(stem[:-1] + "ied")
        elif (
            len(stem) >= 3
            and last not in "wxy"
            and stem[-1] not in VOWELS
            and stem[-2] in VOWELS
            and stem[-3] not in VOWELS
        ):
            out.add(stem + last + "ing")
            out.add(stem + last + "ed")
        else:
            out.add(stem + "ing")
            out.add(stem + "ed")
    # -er / -ly for short adjectives
    if len(stem) <= 5 and last not in VOWELS:
        out.add(stem + "er")
    if len(stem) <= 6 and last not in "ye":
        out.add(stem + "ly")
    return out


def main():
    words = set()
    for stem in STEMS:
        if not stem.isascii() or not stem.isalpha():
            continue
        for w in forms(stem):
            if 2 <= len(w) <= 10:
                words.add(w)
    final = sorted(words)
    with open(sys.argv[1], "w") as f:
        f.write("\n".join(final) + "\n")
    print(f"{len(final)} words")


if __name__ == "__main__":
    main()
